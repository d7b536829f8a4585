//! Scripted synthetic scenes: people modelled as an ellipsoidal head over an
//! ellipsoidal shoulder girdle and an elliptic-cylinder torso, walking along
//! waypoint schedules while turning their heads. The renderer produces depth
//! frames through the same pinhole model the pipeline inverts, and the oracle
//! derives exact states and attention from the schedules.

pub mod dataset;
pub mod oracle;
pub mod render;
pub mod scripts;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::angles::{signed_diff, wrap_2pi};
use crate::config::{Config, ConfigFile};
use crate::error::{Error, Result};
use crate::room::RoomModel;

pub use dataset::{read_gt_rows, synthesize, write_dataset, write_gt_rows, GtRow, Synthesized};
pub use oracle::{ground_truth, head_in_view, GroundTruth};
pub use render::{render_background, render_frame, render_labeled, render_person, Part, RenderOutput, Visibility};
pub use scripts::{default_scripts, prop_script, ranking_script, reference_geometries, reference_histograms};

fn default_head_half_height() -> f64 {
    0.12
}
fn default_shoulder_thickness() -> f64 {
    0.24
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonGeometry {
    pub height_m: f64,
    /// Horizontal semi-axis of the head along the facing direction.
    pub head_radius_major_m: f64,
    pub head_radius_minor_m: f64,
    #[serde(default = "default_head_half_height")]
    pub head_half_height_m: f64,
    pub shoulder_width_m: f64,
    #[serde(default = "default_shoulder_thickness")]
    pub shoulder_thickness_m: f64,
    /// Vertical drop from the head top to the top of the shoulders.
    pub shoulder_depth_drop_m: f64,
}

impl Default for PersonGeometry {
    fn default() -> Self {
        Self {
            height_m: 1.75,
            head_radius_major_m: 0.10,
            head_radius_minor_m: 0.078,
            head_half_height_m: default_head_half_height(),
            shoulder_width_m: 0.44,
            shoulder_thickness_m: default_shoulder_thickness(),
            shoulder_depth_drop_m: 0.28,
        }
    }
}

impl PersonGeometry {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.height_m,
            self.head_radius_major_m,
            self.head_radius_minor_m,
            self.head_half_height_m,
            self.shoulder_width_m,
            self.shoulder_thickness_m,
            self.shoulder_depth_drop_m,
        ];
        if all.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::invariant("geometry", "all person dimensions must be > 0"));
        }
        if self.head_radius_major_m < self.head_radius_minor_m {
            return Err(Error::invariant("geometry.head_radius_major_m", "major radius below minor radius"));
        }
        if self.shoulder_depth_drop_m < self.head_half_height_m {
            return Err(Error::invariant("geometry.shoulder_depth_drop_m", "shoulders overlap the head"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub frame: u64,
    pub position: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadKey {
    pub frame: u64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedPerson {
    pub geometry: PersonGeometry,
    /// Present from the first to the last waypoint frame, linear in between.
    pub waypoints: Vec<Waypoint>,
    /// Head direction keys, interpolated along the shorter arc. Empty means
    /// the head follows the walking direction.
    pub head: Vec<HeadKey>,
}

/// How the renderer maps scene points to pixels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    /// Objects seen from straight above, scaled by the depth of their top.
    #[default]
    Nadir,
    /// Exact pinhole rays; off-axis objects show their sides.
    Perspective,
}

/// Static box standing on the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prop {
    pub center_m: [f64; 2],
    pub size_m: [f64; 2],
    pub height_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioScript {
    pub name: String,
    pub persons: Vec<ScriptedPerson>,
    pub props: Vec<Prop>,
    pub duration_frames: u64,
    pub noise_sigma_mm: f64,
    pub seed: u64,
    pub projection: Projection,
}

impl ScenarioScript {
    pub fn empty(name: &str, duration_frames: u64) -> Self {
        Self {
            name: name.to_string(),
            persons: Vec::new(),
            props: Vec::new(),
            duration_frames,
            noise_sigma_mm: 0.0,
            seed: 0,
            projection: Projection::default(),
        }
    }

    pub fn validate(&self, room: &RoomModel) -> Result<()> {
        if !(self.noise_sigma_mm >= 0.0) {
            return Err(Error::invariant("noise_sigma_mm", "must be >= 0"));
        }
        for p in &self.persons {
            p.geometry.validate()?;
            if p.waypoints.is_empty() {
                return Err(Error::invariant("waypoints", "every person needs at least one waypoint"));
            }
            for w in p.waypoints.windows(2) {
                if w[1].frame <= w[0].frame {
                    return Err(Error::invariant("waypoints", "frames must be strictly increasing"));
                }
            }
            for w in &p.waypoints {
                if !room.contains(w.position) {
                    return Err(Error::invariant(
                        "waypoints",
                        format!("({}, {}) is outside the room", w.position.0, w.position.1),
                    ));
                }
                if w.frame >= self.duration_frames {
                    return Err(Error::invariant("waypoints", format!("frame {} beyond duration", w.frame)));
                }
            }
            for h in p.head.windows(2) {
                if h[1].frame <= h[0].frame {
                    return Err(Error::invariant("head", "frames must be strictly increasing"));
                }
            }
        }
        Ok(())
    }
}

impl ScriptedPerson {
    pub fn first_frame(&self) -> u64 {
        self.waypoints[0].frame
    }

    pub fn last_frame(&self) -> u64 {
        self.waypoints[self.waypoints.len() - 1].frame
    }

    pub fn present(&self, k: u64) -> bool {
        k >= self.first_frame() && k <= self.last_frame()
    }

    /// Scheduled head-center position; `None` when absent.
    pub fn position(&self, k: u64) -> Option<(f64, f64)> {
        if !self.present(k) {
            return None;
        }
        let w = &self.waypoints;
        let i = w.partition_point(|p| p.frame <= k);
        if i == w.len() {
            return Some(w[w.len() - 1].position);
        }
        let (a, b) = (&w[i - 1], &w[i]);
        let t = (k - a.frame) as f64 / (b.frame - a.frame) as f64;
        Some((
            a.position.0 + t * (b.position.0 - a.position.0),
            a.position.1 + t * (b.position.1 - a.position.1),
        ))
    }

    /// Walking direction over the waypoint segment active at `k`.
    fn segment_heading(&self, k: u64) -> f64 {
        let w = &self.waypoints;
        if w.len() < 2 {
            return 0.0;
        }
        let i = w.partition_point(|p| p.frame <= k).clamp(1, w.len() - 1);
        let (a, b) = (w[i - 1].position, w[i].position);
        wrap_2pi((b.1 - a.1).atan2(b.0 - a.0))
    }

    pub fn phi(&self, k: u64) -> f64 {
        let h = &self.head;
        if h.is_empty() {
            return self.segment_heading(k);
        }
        let i = h.partition_point(|p| p.frame <= k);
        if i == 0 {
            return wrap_2pi(h[0].phi);
        }
        if i == h.len() {
            return wrap_2pi(h[h.len() - 1].phi);
        }
        let (a, b) = (&h[i - 1], &h[i]);
        let t = (k - a.frame) as f64 / (b.frame - a.frame) as f64;
        wrap_2pi(a.phi + t * signed_diff(a.phi, b.phi))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PersonEntry {
    #[serde(default)]
    geometry: Option<PersonGeometry>,
    /// `[frame, x, y]`
    waypoints: Vec<[f64; 3]>,
    /// `[frame, phi_deg]`
    #[serde(default)]
    head_deg: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    name: Option<String>,
    duration_frames: u64,
    #[serde(default)]
    noise_sigma_mm: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    projection: Option<Projection>,
    #[serde(default)]
    persons: Vec<PersonEntry>,
    #[serde(default)]
    props: Vec<Prop>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScriptFile {
    #[serde(flatten)]
    config: ConfigFile,
    scenario: ScenarioSection,
}

/// Default depth noise of the renderer, millimeters.
pub const DEFAULT_NOISE_MM: f64 = 10.0;

fn frame_of(v: f64, what: &str, path: &Path) -> Result<u64> {
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as u64)
    } else {
        Err(Error::data(path, format!("{what}: frame {v} is not a non-negative integer")))
    }
}

/// Parses a scenario file: the config sections plus a `[scenario]` table.
pub fn parse_script(text: &str, path: &Path) -> Result<(Config, ScenarioScript)> {
    let file: ScriptFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let cfg = file.config.resolve(path.parent())?;
    let s = file.scenario;
    let mut persons = Vec::new();
    for p in s.persons {
        let waypoints = p
            .waypoints
            .iter()
            .map(|w| {
                Ok(Waypoint {
                    frame: frame_of(w[0], "waypoints", path)?,
                    position: (w[1], w[2]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let head = p
            .head_deg
            .iter()
            .map(|h| {
                Ok(HeadKey {
                    frame: frame_of(h[0], "head_deg", path)?,
                    phi: h[1].to_radians(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        persons.push(ScriptedPerson {
            geometry: p.geometry.unwrap_or_default(),
            waypoints,
            head,
        });
    }
    let script = ScenarioScript {
        name: s.name.unwrap_or_else(|| {
            path.file_stem()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into())
        }),
        persons,
        props: s.props,
        duration_frames: s.duration_frames,
        noise_sigma_mm: s.noise_sigma_mm.unwrap_or(DEFAULT_NOISE_MM),
        seed: s.seed.unwrap_or(0),
        projection: s.projection.unwrap_or_default(),
    };
    script.validate(&cfg.room)?;
    Ok((cfg, script))
}

pub fn load_script(path: impl AsRef<Path>) -> Result<(Config, ScenarioScript)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_script(&text, path)
}

pub fn write_script(cfg: &Config, script: &ScenarioScript, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = ScriptFile {
        config: ConfigFile::from_config(cfg),
        scenario: ScenarioSection {
            name: Some(script.name.clone()),
            duration_frames: script.duration_frames,
            noise_sigma_mm: Some(script.noise_sigma_mm),
            seed: Some(script.seed),
            projection: Some(script.projection),
            persons: script
                .persons
                .iter()
                .map(|p| PersonEntry {
                    geometry: Some(p.geometry.clone()),
                    waypoints: p
                        .waypoints
                        .iter()
                        .map(|w| [w.frame as f64, w.position.0, w.position.1])
                        .collect(),
                    head_deg: p.head.iter().map(|h| [h.frame as f64, h.phi.to_degrees()]).collect(),
                })
                .collect(),
            props: script.props.clone(),
        },
    };
    let text = toml::to_string_pretty(&file).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
