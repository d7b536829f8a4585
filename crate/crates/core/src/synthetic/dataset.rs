//! Rendering a whole script into frames plus per-frame ground truth, in
//! memory or as a frames directory.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::oracle::{ground_truth, GroundTruth};
use super::render::{render_background, render_labeled, Visibility};
use super::{write_script, ScenarioScript};
use crate::config::Config;
use crate::depth::{write_pgm16, BackgroundModel, DepthFrame, Manifest, ManifestEntry, BACKGROUND_FILE, MANIFEST_FILE};
use crate::error::{Error, Result};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
pub const SCENARIO_FILE: &str = "scenario.toml";

/// One person in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtRow {
    pub frame: u64,
    pub person_id: u64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub psi_deg: f64,
    pub phi_deg: f64,
    /// `full`, `partial` or `out`.
    pub visible: String,
}

impl GtRow {
    pub fn visibility(&self) -> Visibility {
        match self.visible.as_str() {
            "full" => Visibility::Full,
            "partial" => Visibility::Partial,
            _ => Visibility::Out,
        }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

#[derive(Debug, Clone)]
pub struct Synthesized {
    pub background: BackgroundModel,
    pub frames: Vec<DepthFrame>,
    pub rows: Vec<GtRow>,
    pub truth: GroundTruth,
}

/// Renders every frame of the script and the matching ground truth.
pub fn synthesize(script: &ScenarioScript, cfg: &Config) -> Result<Synthesized> {
    script.validate(&cfg.room)?;
    let truth = ground_truth(script, cfg)?;
    let fps = cfg.pipeline.fps;
    let mut frames = Vec::with_capacity(script.duration_frames as usize);
    let mut rows = Vec::new();
    for k in 0..script.duration_frames {
        let out = render_labeled(script, k, &cfg.room)?;
        for (i, p) in script.persons.iter().enumerate() {
            if !p.present(k) {
                continue;
            }
            let s = &truth.full_states[i][(k - p.first_frame()) as usize];
            rows.push(GtRow {
                frame: k,
                person_id: i as u64,
                x: s.p_prime.0,
                y: s.p_prime.1,
                v: s.v,
                psi_deg: s.psi.to_degrees(),
                phi_deg: s.phi.to_degrees(),
                visible: out.visibility[i].as_str().to_string(),
            });
        }
        frames.push(out.frame.with_index(k, k as f64 / fps));
    }
    Ok(Synthesized {
        background: render_background(&cfg.room),
        frames,
        rows,
        truth,
    })
}

/// Writes frames, background, manifest, ground truth and the scenario itself
/// into `dir`.
pub fn write_dataset(script: &ScenarioScript, cfg: &Config, dir: &Path) -> Result<Synthesized> {
    let data = synthesize(script, cfg)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_pgm16(&data.background.frame, dir.join(BACKGROUND_FILE))?;
    let mut entries = Vec::with_capacity(data.frames.len());
    for f in &data.frames {
        let name = format!("frame_{:05}.pgm", f.frame_index);
        write_pgm16(f, dir.join(&name))?;
        entries.push(ManifestEntry {
            frame: f.frame_index,
            path: name.into(),
            timestamp_s: f.timestamp_s,
        });
    }
    Manifest {
        dir: dir.to_path_buf(),
        entries,
    }
    .save(dir.join(MANIFEST_FILE))?;
    write_gt_rows(&data.rows, &dir.join(GROUND_TRUTH_FILE))?;
    write_script(cfg, script, dir.join(SCENARIO_FILE))?;
    Ok(data)
}

const GT_HEADER: [&str; 8] = ["frame", "person_id", "x", "y", "v", "psi_deg", "phi_deg", "visible"];

pub fn write_gt_rows(rows: &[GtRow], path: &Path) -> Result<()> {
    // explicit header so an empty scene still yields a well-formed table
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::data(path, e.to_string()))?;
    w.write_record(GT_HEADER).map_err(|e| Error::data(path, e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::data(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_gt_rows(path: &Path) -> Result<Vec<GtRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::data(path, e.to_string()))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::data(path, e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::read_pgm16;
    use crate::synthetic::scripts::prop_script;

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Config::default();
        let mut script = prop_script();
        script.duration_frames = 4;
        script.persons[0].waypoints[1].frame = 3;
        let data = write_dataset(&script, &cfg, dir.path()).unwrap();
        let manifest = Manifest::load(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(manifest.entries.len(), 4);
        let f2 = manifest.read_frame(&manifest.entries[2]).unwrap();
        assert_eq!(f2.depth_mm, data.frames[2].depth_mm);
        let bg = read_pgm16(dir.path().join(BACKGROUND_FILE)).unwrap();
        assert_eq!(bg.depth_mm, data.background.frame.depth_mm);
        let rows = read_gt_rows(&dir.path().join(GROUND_TRUTH_FILE)).unwrap();
        assert_eq!(rows, data.rows);
        assert_eq!(rows.len(), 4);
        assert!(dir.path().join(SCENARIO_FILE).exists());
    }
}
