//! Output files: trajectory and detection tables, the attention heatmap, and
//! JSON reports.

use std::path::Path;

use image::{GrayImage, Luma};
use serde::Serialize;

use crate::attention::AttentionMap;
use crate::detection::HeadDetection;
use crate::error::{Error, Result};
use crate::trajectory::OrientedTrajectory;

/// Height of the heatmap strip, pixels.
pub const HEATMAP_ROWS: u32 = 24;

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::data(path, e.to_string()))
}

fn write_record(w: &mut csv::Writer<std::fs::File>, path: &Path, rec: &[String]) -> Result<()> {
    w.write_record(rec).map_err(|e| Error::data(path, e.to_string()))
}

/// `frame,person_id,x,y,v,psi_deg,phi_deg`, four decimals.
pub fn write_trajectories_csv(trajs: &[OrientedTrajectory], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_record(
        &mut w,
        path,
        &["frame", "person_id", "x", "y", "v", "psi_deg", "phi_deg"].map(String::from),
    )?;
    for t in trajs {
        for s in &t.states {
            let rec = [
                s.frame_index.to_string(),
                t.person_id.to_string(),
                format!("{:.4}", s.p_prime.0),
                format!("{:.4}", s.p_prime.1),
                format!("{:.4}", s.v),
                format!("{:.4}", s.psi.to_degrees()),
                format!("{:.4}", s.phi.to_degrees()),
            ];
            write_record(&mut w, path, &rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-frame detections, for runs without tracking.
pub fn write_detections_csv(detections: &[(u64, Vec<HeadDetection>)], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_record(
        &mut w,
        path,
        &["frame", "u", "v", "x", "y", "major_px", "minor_px", "axis_deg", "head_depth_mm", "partial"].map(String::from),
    )?;
    for (k, dets) in detections {
        for d in dets {
            let rec = [
                k.to_string(),
                format!("{:.2}", d.center_px.0),
                format!("{:.2}", d.center_px.1),
                format!("{:.4}", d.center_room.0),
                format!("{:.4}", d.center_room.1),
                format!("{:.2}", d.ellipse_major_px),
                format!("{:.2}", d.ellipse_minor_px),
                format!("{:.4}", d.axis_angle_rad.to_degrees()),
                format!("{:.1}", d.head_top_depth_mm),
                d.partial.to_string(),
            ];
            write_record(&mut w, path, &rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Gray levels of the unrolled perimeter, scaled so the maximum is 255.
pub fn heatmap_levels(map: &AttentionMap) -> Vec<u8> {
    let max = map.values.iter().copied().fold(0.0, f64::max);
    map.values
        .iter()
        .map(|v| if max > 0.0 { (255.0 * v / max).round() as u8 } else { 0 })
        .collect()
}

/// 8-bit strip of the unrolled perimeter (S, E, N, W), `px_per_sample`
/// columns per wall sample.
pub fn write_heatmap_png(map: &AttentionMap, px_per_sample: u32, path: &Path) -> Result<()> {
    if px_per_sample == 0 {
        return Err(Error::Precondition("heatmap pixels per sample must be > 0".into()));
    }
    let levels = heatmap_levels(map);
    let width = levels.len() as u32 * px_per_sample;
    let img = GrayImage::from_fn(width, HEATMAP_ROWS, |x, _| Luma([levels[(x / px_per_sample) as usize]]));
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::data(path, e.to_string()))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::data(path, e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::room::RoomModel;
    use crate::trajectory::OrientedState;

    #[test]
    fn trajectory_csv_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = OrientedTrajectory {
            person_id: 3,
            states: vec![OrientedState {
                frame_index: 7,
                p_prime: (1.0, 2.123456),
                v: 0.5,
                psi: std::f64::consts::PI,
                phi: 0.0,
                theta: None,
            }],
        };
        write_trajectories_csv(&[t], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "frame,person_id,x,y,v,psi_deg,phi_deg");
        assert_eq!(lines[1], "7,3,1.0000,2.1235,0.5000,180.0000,0.0000");
    }

    #[test]
    fn heatmap_png_dimensions_and_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.png");
        let grid = RoomModel::default().wall_samples(1.0).unwrap();
        let mut raw = vec![0.0; grid.len()];
        raw[0] = 2.0;
        raw[3] = 1.0;
        let map = AttentionMap::normalize(&grid, raw);
        assert_eq!(heatmap_levels(&map)[..4], [255, 0, 0, 128]);
        write_heatmap_png(&map, 3, &path).unwrap();
        let img = image::open(&path).unwrap().to_luma8();
        assert_eq!(img.dimensions(), (60, HEATMAP_ROWS));
        assert_eq!(img.get_pixel(2, 0)[0], 255);
        assert_eq!(img.get_pixel(3, 5)[0], 0);
        assert!(write_heatmap_png(&map, 0, &path).is_err());
    }
}
