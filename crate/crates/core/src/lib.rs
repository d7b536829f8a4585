//! Audience measurement from a top-view depth camera.
//!
//! A nadir depth camera watches people in a room with signs on its walls.
//! Every frame goes through head detection ([`detection`]), detections are
//! linked into tracks with a resolved head direction ([`tracking`]), tracks
//! become oriented trajectories ([`trajectory`]), and the trajectories are
//! scored into a focus-of-attention map over the walls and a per-sign report
//! ([`attention`]). [`synthetic`] renders scripted scenes with exact ground
//! truth, and [`pipeline`] runs everything end to end.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angles;
pub mod attention;
pub mod config;
pub mod depth;
pub mod detection;
pub mod error;
pub mod export;
pub mod pipeline;
pub mod room;
pub mod synthetic;
pub mod tracking;
pub mod trajectory;

pub use attention::{AttentionMap, AttentionParams, SignReport, SignScore};
pub use config::{load_config, Config, PipelineConfig};
pub use depth::{BackgroundModel, DepthFrame, Manifest};
pub use detection::{detect_heads, HeadDetection};
pub use error::{Error, Result};
pub use pipeline::{evaluate, run_directory, run_frames, Evaluation, RunOutput};
pub use room::{RoomModel, SignSpec, Wall, WallGrid};
pub use tracking::{Track, Tracker};
pub use trajectory::{OrientedState, OrientedTrajectory};
