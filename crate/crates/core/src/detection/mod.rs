//! Per-frame head detection from a top-view depth image.
//!
//! Stages: background subtraction, 4-connected blob extraction, person
//! filtering by depth-histogram correlation against reference heads, the
//! head/shoulder split at the histogram valley, and an oriented-ellipse fit of
//! the head mask.

pub mod blob;
pub mod ellipse;
pub mod histogram;

use serde::Serialize;

pub use blob::{extract_blobs, subtract_background, BodyBlob, BoundingBox, Mask};
pub use ellipse::{fit_ellipse, EllipseFit};
pub use histogram::{
    blob_histogram, filter_person_blobs, head_split_depth, histogram_correlation, split_head_mask, DepthHistogram,
    ReferenceHistograms,
};

use crate::config::PipelineConfig;
use crate::depth::{BackgroundModel, DepthFrame};
use crate::error::{Error, Result};
use crate::room::RoomModel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeadDetection {
    pub center_px: (f64, f64),
    pub center_room: (f64, f64),
    pub ellipse_major_px: f64,
    pub ellipse_minor_px: f64,
    /// Head axis in `[0, π)`; which end is the face is not known here.
    pub axis_angle_rad: f64,
    pub head_top_depth_mm: f64,
    /// The body blob touches the image edge.
    pub partial: bool,
}

fn median(values: &mut [u16]) -> f64 {
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] as f64 + values[n / 2] as f64) / 2.0
    }
}

/// Runs the full detection chain on one frame. Blobs failing any stage are
/// dropped; only structural errors propagate.
pub fn detect_heads(
    frame: &DepthFrame,
    bg: &BackgroundModel,
    cfg: &PipelineConfig,
    refs: &[DepthHistogram],
    room: &RoomModel,
) -> Result<Vec<HeadDetection>> {
    if refs.is_empty() {
        return Err(Error::Precondition("no reference histograms".into()));
    }
    let mask = subtract_background(frame, bg, cfg.bg_delta_mm)?;
    let blobs = extract_blobs(&mask, cfg.min_blob_px);
    let hists = blobs
        .iter()
        .map(|b| blob_histogram(frame, b, cfg.hist_bins, cfg.hist_range_mm))
        .collect::<Result<Vec<_>>>()?;
    let persons = histogram::person_blob_indices(&hists, refs, cfg.corr_threshold)?;

    let mut out = Vec::with_capacity(persons.len());
    for i in persons {
        let blob = &blobs[i];
        let Ok(head) = split_head_mask(frame, blob, &hists[i]) else {
            continue;
        };
        let Ok(fit) = fit_ellipse(&head) else {
            continue;
        };
        let mut depths: Vec<u16> = head.iter().map(|&(u, v)| frame.at(u, v)).collect();
        let head_depth = median(&mut depths);
        let Ok(center_room) = room.pixel_to_room(fit.center.0, fit.center.1, head_depth) else {
            continue;
        };
        out.push(HeadDetection {
            center_px: fit.center,
            center_room,
            ellipse_major_px: fit.major_px,
            ellipse_minor_px: fit.minor_px,
            axis_angle_rad: fit.axis_angle,
            head_top_depth_mm: head_depth,
            partial: blob.partial,
        });
    }
    Ok(out)
}
