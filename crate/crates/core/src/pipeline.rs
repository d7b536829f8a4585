//! End-to-end run over a frame sequence, and scoring of a run against ground
//! truth.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::angles::circular_distance;
use crate::attention::{accumulate_trajectory, aggregate, sign_report, AttentionMap, AttentionParams, SignReport};
use crate::config::Config;
use crate::depth::{read_pgm16, BackgroundModel, DepthFrame, Manifest, BACKGROUND_FILE, MANIFEST_FILE};
use crate::detection::{detect_heads, DepthHistogram, HeadDetection};
use crate::error::{Error, Result};
use crate::synthetic::{GroundTruth, GtRow, Visibility};
use crate::tracking::{Track, Tracker};
use crate::trajectory::{build_trajectory, OrientedTrajectory};

/// Distance within which a detection counts as a given ground-truth head.
pub const MATCH_RADIUS_M: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub detections: Vec<(u64, Vec<HeadDetection>)>,
    /// Confirmed tracks; empty when tracking was disabled.
    pub tracks: Vec<Track>,
    pub trajectories: Vec<OrientedTrajectory>,
    pub map: Option<AttentionMap>,
    pub report: Option<SignReport>,
    pub frames: usize,
    pub wall_clock_s: f64,
}

impl RunOutput {
    pub fn effective_fps(&self) -> f64 {
        if self.wall_clock_s > 0.0 {
            self.frames as f64 / self.wall_clock_s
        } else {
            f64::INFINITY
        }
    }
}

/// Detects, tracks and scores attention over `frames`, in order.
pub fn run_frames<I>(frames: I, bg: &BackgroundModel, cfg: &Config, refs: &[DepthHistogram], track: bool) -> Result<RunOutput>
where
    I: IntoIterator<Item = Result<DepthFrame>>,
{
    let start = Instant::now();
    let mut tracker = Tracker::new(&cfg.pipeline, &cfg.room);
    let mut detections = Vec::new();
    let mut count = 0;
    for frame in frames {
        let frame = frame?;
        let dets = detect_heads(&frame, bg, &cfg.pipeline, refs, &cfg.room)?;
        if track {
            tracker.update(&dets, frame.frame_index)?;
        }
        detections.push((frame.frame_index, dets));
        count += 1;
    }
    let tracks: Vec<Track> = tracker.into_tracks().into_iter().filter(Track::is_confirmed).collect();
    let trajectories = tracks
        .iter()
        .filter(|t| t.history.len() >= 2)
        .map(|t| build_trajectory(t, &cfg.room, &cfg.pipeline))
        .collect::<Result<Vec<_>>>()?;
    let (map, report) = if trajectories.is_empty() {
        (None, None)
    } else {
        let params = AttentionParams::from(&cfg.pipeline);
        let grid = cfg.room.wall_samples(cfg.pipeline.wall_step_m)?;
        let maps = trajectories
            .iter()
            .map(|t| accumulate_trajectory(t, &cfg.room, &grid, &params))
            .collect::<Result<Vec<_>>>()?;
        let map = aggregate(&maps)?;
        let report = sign_report(&map, &cfg.signs, &trajectories, &cfg.room, &params);
        (Some(map), Some(report))
    };
    Ok(RunOutput {
        detections,
        tracks,
        trajectories,
        map,
        report,
        frames: count,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

/// Loads `manifest.csv` and `background.pgm` from `dir`.
pub fn open_frames(dir: &Path) -> Result<(Manifest, BackgroundModel)> {
    let manifest = Manifest::load(dir.join(MANIFEST_FILE))?;
    let bg = BackgroundModel::new(read_pgm16(dir.join(BACKGROUND_FILE))?);
    Ok((manifest, bg))
}

/// Runs over a frames directory.
pub fn run_directory(dir: &Path, cfg: &Config, refs: &[DepthHistogram], track: bool) -> Result<RunOutput> {
    let (manifest, bg) = open_frames(dir)?;
    if manifest.entries.is_empty() {
        return Err(Error::data(dir.join(MANIFEST_FILE), "no frames listed"));
    }
    let frames = manifest.entries.iter().map(|e| manifest.read_frame(e));
    run_frames(frames, &bg, cfg, refs, track)
}

/// Scores of one run against the ground truth of its scene.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Evaluation {
    /// Fully visible ground-truth heads over all frames.
    pub visible_heads: usize,
    pub false_negatives: usize,
    /// Confirmed-track points not within reach of any person.
    pub false_positives: usize,
    pub confirmed_tracks: usize,
    /// Frames where a person's matched track changes identity.
    pub id_switches: usize,
    /// Frame-to-frame head-direction jumps between 135° and 225°.
    pub direction_flips: usize,
    pub angle_samples: usize,
    pub angle_mae_deg: Option<f64>,
    pub position_mae_m: Option<f64>,
    /// Total-variation distance between run and ground-truth attention maps.
    pub map_tv_distance: Option<f64>,
    pub ranking_matches: Option<bool>,
}

impl Evaluation {
    pub fn fn_rate(&self) -> f64 {
        if self.visible_heads == 0 {
            0.0
        } else {
            self.false_negatives as f64 / self.visible_heads as f64
        }
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

pub fn evaluate(run: &RunOutput, rows: &[GtRow], truth: Option<&GroundTruth>) -> Evaluation {
    let mut ev = Evaluation {
        confirmed_tracks: run.tracks.len(),
        ..Evaluation::default()
    };
    let at_frame = |k: u64| rows.iter().filter(move |r| r.frame == k);

    for (k, dets) in &run.detections {
        for r in at_frame(*k).filter(|r| r.visibility() == Visibility::Full) {
            ev.visible_heads += 1;
            if !dets.iter().any(|d| dist(d.center_room, r.position()) <= MATCH_RADIUS_M) {
                ev.false_negatives += 1;
            }
        }
    }

    let mut angle_err = 0.0;
    let mut pos_err = 0.0;
    let mut owner: std::collections::HashMap<u64, u64> = std::collections::HashMap::new();
    let mut points: Vec<(u64, u64, &crate::tracking::TrackPoint)> = run
        .tracks
        .iter()
        .flat_map(|t| t.history.iter().map(move |p| (p.frame_index, t.id, p)))
        .collect();
    points.sort_by_key(|p| (p.0, p.1));
    for (k, id, p) in points {
        let nearest = at_frame(k)
            .map(|r| (r, dist(p.position, r.position())))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((r, d)) if d <= MATCH_RADIUS_M => {
                if let Some(prev) = owner.insert(r.person_id, id) {
                    if prev != id {
                        ev.id_switches += 1;
                    }
                }
                if let Some(phi) = p.phi {
                    angle_err += circular_distance(phi, r.phi_deg.to_radians()).to_degrees();
                    pos_err += d;
                    ev.angle_samples += 1;
                }
            }
            _ => ev.false_positives += 1,
        }
    }
    if ev.angle_samples > 0 {
        ev.angle_mae_deg = Some(angle_err / ev.angle_samples as f64);
        ev.position_mae_m = Some(pos_err / ev.angle_samples as f64);
    }

    for t in &run.tracks {
        for w in t.history.windows(2) {
            if let (Some(a), Some(b)) = (w[0].phi, w[1].phi) {
                if circular_distance(a, b) >= 135f64.to_radians() {
                    ev.direction_flips += 1;
                }
            }
        }
    }

    if let Some(gt) = truth {
        if let (Some(m), Some(g)) = (&run.map, &gt.map) {
            if m.values.len() == g.values.len() {
                let tv = m.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
                ev.map_tv_distance = Some(tv);
            }
        }
        if let (Some(r), Some(g)) = (&run.report, &gt.report) {
            ev.ranking_matches = Some(r.ranking() == g.ranking());
        }
    }
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{reference_histograms, synthesize, ScenarioScript};
    use crate::synthetic::scripts::prop_script;

    #[test]
    fn empty_scene_has_no_output() {
        let cfg = Config::default();
        let refs = reference_histograms(&cfg).unwrap();
        let mut script = ScenarioScript::empty("empty", 5);
        script.noise_sigma_mm = 10.0;
        let data = synthesize(&script, &cfg).unwrap();
        let run = run_frames(data.frames.into_iter().map(Ok), &data.background, &cfg, &refs, true).unwrap();
        assert_eq!(run.frames, 5);
        assert!(run.detections.iter().all(|(_, d)| d.is_empty()));
        assert!(run.tracks.is_empty() && run.map.is_none() && run.report.is_none());
    }

    #[test]
    fn walker_next_to_a_box() {
        let cfg = Config::default();
        let refs = reference_histograms(&cfg).unwrap();
        let data = synthesize(&prop_script(), &cfg).unwrap();
        let run = run_frames(data.frames.iter().cloned().map(Ok), &data.background, &cfg, &refs, true).unwrap();
        let ev = evaluate(&run, &data.rows, Some(&data.truth));
        assert_eq!(ev.confirmed_tracks, 1);
        assert_eq!(ev.false_positives, 0);
        assert_eq!(ev.false_negatives, 0, "{ev:?}");
        assert_eq!(ev.id_switches, 0);
    }

    #[test]
    fn frames_must_increase() {
        let cfg = Config::default();
        let refs = reference_histograms(&cfg).unwrap();
        let data = synthesize(&ScenarioScript::empty("e", 2), &cfg).unwrap();
        let mut frames = data.frames.clone();
        frames.reverse();
        assert!(run_frames(frames.into_iter().map(Ok), &data.background, &cfg, &refs, true).is_err());
    }
}
