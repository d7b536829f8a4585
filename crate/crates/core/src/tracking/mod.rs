//! Frame-to-frame association of head detections into tracks.
//!
//! Each track predicts its next position with a constant-acceleration model
//! fitted to its last three positions, keeps only detections inside a circular
//! gate around the prediction, and takes its nearest neighbour. When gates of
//! different tracks share detections, a global minimum-distance assignment
//! decides. The ellipse axis of each matched detection is turned into a head
//! direction that never flips by 180° between frames.

pub mod hungarian;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::angles::{bearing, circular_distance, signed_diff, wrap_2pi};
use crate::config::PipelineConfig;
use crate::detection::HeadDetection;
use crate::error::{Error, Result};
use crate::room::RoomModel;

pub use hungarian::{assignment_cost, min_cost_assignment};

/// Net motion needed before a displacement is trusted as a heading.
const MIN_HEADING_DISPLACEMENT_M: f64 = 0.05;
/// Cost standing in for "outside the gate" in the assignment problem.
const GATED_OUT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Exited,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackPoint {
    pub frame_index: u64,
    pub position: (f64, f64),
    pub axis_angle: f64,
    pub center_px: (f64, f64),
    pub partial: bool,
    /// Resolved head direction; filled once the track is confirmed.
    pub phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Track {
    pub id: u64,
    pub history: Vec<TrackPoint>,
    pub phi_rad: Option<f64>,
    pub status: TrackStatus,
    pub misses: usize,
    /// Consecutive matched frames.
    pub hits: usize,
    pub confirmed_at: Option<u64>,
}

impl Track {
    fn new(id: u64, point: TrackPoint) -> Self {
        Self {
            id,
            history: vec![point],
            phi_rad: None,
            status: TrackStatus::Tentative,
            misses: 0,
            hits: 1,
            confirmed_at: None,
        }
    }

    /// A track built from a bare position history, for tests and tools.
    pub fn from_positions(id: u64, positions: &[(u64, (f64, f64))]) -> Self {
        Self {
            id,
            history: positions
                .iter()
                .map(|&(frame_index, position)| TrackPoint {
                    frame_index,
                    position,
                    axis_angle: 0.0,
                    center_px: (0.0, 0.0),
                    partial: false,
                    phi: None,
                })
                .collect(),
            phi_rad: None,
            status: TrackStatus::Tentative,
            misses: 0,
            hits: positions.len(),
            confirmed_at: None,
        }
    }

    pub fn is_confirmed(&self) -> bool {
        self.confirmed_at.is_some()
    }

    pub fn is_active(&self) -> bool {
        self.status != TrackStatus::Exited
    }

    pub fn last(&self) -> &TrackPoint {
        self.history.last().expect("tracks are never empty")
    }
}

/// Position expected in the frame after the last history entry.
pub fn predict_position(track: &Track) -> (f64, f64) {
    predict_at(track, track.last().frame_index + 1)
}

/// Constant-acceleration extrapolation to `frame`: the quadratic through the
/// last three (frame, position) samples. For consecutive frames this is
/// `3·p3 − 3·p2 + p1`. Shorter histories fall back to linear motion or the
/// last position.
pub fn predict_at(track: &Track, frame: u64) -> (f64, f64) {
    let h = &track.history;
    let t = frame as f64;
    match h.len() {
        0 => unreachable!("tracks are never empty"),
        1 => h[0].position,
        2 => {
            let (a, b) = (&h[0], &h[1]);
            let s = (t - b.frame_index as f64) / (b.frame_index as f64 - a.frame_index as f64);
            (
                b.position.0 + s * (b.position.0 - a.position.0),
                b.position.1 + s * (b.position.1 - a.position.1),
            )
        }
        n => {
            let pts = &h[n - 3..];
            let ts: Vec<f64> = pts.iter().map(|p| p.frame_index as f64).collect();
            let mut out = (0.0, 0.0);
            for i in 0..3 {
                let mut w = 1.0;
                for j in 0..3 {
                    if i != j {
                        w *= (t - ts[j]) / (ts[i] - ts[j]);
                    }
                }
                out.0 += w * pts[i].position.0;
                out.1 += w * pts[i].position.1;
            }
            out
        }
    }
}

/// Detections within `radius` of `prediction`, nearest first (ties by index),
/// as `(detection index, distance)`.
pub fn gate(prediction: (f64, f64), detections: &[HeadDetection], radius: f64) -> Vec<(usize, f64)> {
    let mut inside: Vec<(usize, f64)> = detections
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let dx = d.center_room.0 - prediction.0;
            let dy = d.center_room.1 - prediction.1;
            (i, (dx * dx + dy * dy).sqrt())
        })
        .filter(|(_, dist)| *dist <= radius)
        .collect();
    inside.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    inside
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Association {
    /// `(track index, detection index)`
    pub matches: Vec<(usize, usize)>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_tracks: Vec<usize>,
}

/// Matches active tracks to detections for `frame`.
pub fn associate(tracks: &[Track], detections: &[HeadDetection], cfg: &PipelineConfig, frame: u64) -> Association {
    let active: Vec<usize> = (0..tracks.len()).filter(|&i| tracks[i].is_active()).collect();
    let gates: Vec<Vec<(usize, f64)>> = active
        .iter()
        .map(|&i| gate(predict_at(&tracks[i], frame), detections, cfg.gate_radius_m))
        .collect();

    let mut claimed = vec![0usize; detections.len()];
    for g in &gates {
        for &(d, _) in g {
            claimed[d] += 1;
        }
    }
    let overlapping = claimed.iter().any(|&c| c > 1);

    let mut det_taken = vec![false; detections.len()];
    let mut assoc = Association::default();
    if !overlapping {
        for (k, g) in gates.iter().enumerate() {
            match g.first() {
                Some(&(d, _)) => {
                    det_taken[d] = true;
                    assoc.matches.push((active[k], d));
                }
                None => assoc.unmatched_tracks.push(active[k]),
            }
        }
    } else {
        let mut cost = vec![vec![GATED_OUT; detections.len()]; active.len()];
        for (k, g) in gates.iter().enumerate() {
            for &(d, dist) in g {
                cost[k][d] = dist;
            }
        }
        let assignment = min_cost_assignment(&cost);
        for (k, a) in assignment.into_iter().enumerate() {
            match a {
                Some(d) if cost[k][d] < GATED_OUT => {
                    det_taken[d] = true;
                    assoc.matches.push((active[k], d));
                }
                _ => assoc.unmatched_tracks.push(active[k]),
            }
        }
    }
    assoc.unmatched_detections = (0..detections.len()).filter(|&d| !det_taken[d]).collect();
    assoc
}

/// Picks the end of the head axis the person faces.
///
/// Without a previous direction, the candidate within π/2 of
/// `trajectory_dir` wins. Otherwise the candidate closest to `previous` wins
/// (ties go toward `trajectory_dir`) and the change is clamped to
/// `max_turn` per frame.
pub fn resolve_direction(previous: Option<f64>, axis_angle: f64, trajectory_dir: Option<f64>, max_turn: f64) -> f64 {
    let a = wrap_2pi(axis_angle);
    let b = wrap_2pi(axis_angle + PI);
    let toward_motion = |a: f64, b: f64| match trajectory_dir {
        Some(t) if circular_distance(b, t) < circular_distance(a, t) => b,
        _ => a,
    };
    match previous {
        None => match trajectory_dir {
            Some(t) if circular_distance(a, t) > FRAC_PI_2 => b,
            _ => a,
        },
        Some(prev) => {
            let (da, db) = (circular_distance(prev, a), circular_distance(prev, b));
            let chosen = if (da - db).abs() <= 1e-9 {
                toward_motion(a, b)
            } else if da < db {
                a
            } else {
                b
            };
            let delta = signed_diff(prev, chosen);
            if delta.abs() > max_turn {
                wrap_2pi(prev + max_turn.copysign(delta))
            } else {
                chosen
            }
        }
    }
}

/// Stateful tracker for one sequence; frames must arrive in order.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: PipelineConfig,
    image_size: (usize, usize),
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u64>,
}

impl Tracker {
    pub fn new(cfg: &PipelineConfig, room: &RoomModel) -> Self {
        Self {
            cfg: cfg.clone(),
            image_size: room.image_size,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
        }
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn into_tracks(self) -> Vec<Track> {
        self.tracks
    }

    pub fn confirmed_tracks(&self) -> impl Iterator<Item = &Track> {
        self.tracks.iter().filter(|t| t.is_confirmed())
    }

    fn border_distance(&self, px: (f64, f64)) -> f64 {
        let (w, h) = (self.image_size.0 as f64 - 1.0, self.image_size.1 as f64 - 1.0);
        px.0.min(w - px.0).min(px.1).min(h - px.1)
    }

    /// Inward heading from the image border nearest to `px`.
    fn entry_direction(&self, px: (f64, f64)) -> f64 {
        let (w, h) = (self.image_size.0 as f64 - 1.0, self.image_size.1 as f64 - 1.0);
        let options = [(px.0, 0.0), (w - px.0, PI), (px.1, FRAC_PI_2), (h - px.1, 1.5 * PI)];
        options
            .iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|o| o.1)
            .unwrap_or(0.0)
    }

    fn moved_inward(&self, track: &Track) -> bool {
        let first = &track.history[0];
        if !first.partial {
            return true;
        }
        self.border_distance(track.last().center_px) - self.border_distance(first.center_px) >= self.cfg.min_inward_px
    }

    fn local_heading(history: &[TrackPoint], k: usize) -> Option<f64> {
        let from = &history[k.saturating_sub(2)];
        let to = &history[k];
        let (dx, dy) = (to.position.0 - from.position.0, to.position.1 - from.position.1);
        ((dx * dx + dy * dy).sqrt() >= MIN_HEADING_DISPLACEMENT_M).then(|| bearing(from.position, to.position))
    }

    fn initial_heading(&self, track: &Track) -> f64 {
        let first = &track.history[0];
        let last = track.last();
        let (dx, dy) = (last.position.0 - first.position.0, last.position.1 - first.position.1);
        if (dx * dx + dy * dy).sqrt() >= MIN_HEADING_DISPLACEMENT_M {
            bearing(first.position, last.position)
        } else {
            self.entry_direction(first.center_px)
        }
    }

    fn confirm(&mut self, idx: usize, frame: u64) {
        let heading = self.initial_heading(&self.tracks[idx]);
        let max_turn = self.cfg.max_turn_rate_rad;
        let track = &mut self.tracks[idx];
        let mut prev = None;
        for k in 0..track.history.len() {
            let dir = if k == 0 {
                Some(heading)
            } else {
                Self::local_heading(&track.history, k)
            };
            let phi = resolve_direction(prev, track.history[k].axis_angle, dir, max_turn);
            track.history[k].phi = Some(phi);
            prev = Some(phi);
        }
        track.phi_rad = prev;
        track.status = TrackStatus::Confirmed;
        track.confirmed_at = Some(frame);
    }

    /// Consumes the detections of one frame.
    pub fn update(&mut self, detections: &[HeadDetection], frame: u64) -> Result<()> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(Error::Precondition(format!(
                    "frame {frame} does not follow frame {last}"
                )));
            }
        }
        self.last_frame = Some(frame);

        let assoc = associate(&self.tracks, detections, &self.cfg, frame);
        for &(t, d) in &assoc.matches {
            let det = &detections[d];
            let track = &mut self.tracks[t];
            track.history.push(TrackPoint {
                frame_index: frame,
                position: det.center_room,
                axis_angle: det.axis_angle_rad,
                center_px: det.center_px,
                partial: det.partial,
                phi: None,
            });
            track.misses = 0;
            track.hits += 1;
            match track.status {
                TrackStatus::Confirmed => {
                    let k = track.history.len() - 1;
                    let dir = Self::local_heading(&track.history, k);
                    let phi = resolve_direction(track.phi_rad, det.axis_angle_rad, dir, self.cfg.max_turn_rate_rad);
                    track.history[k].phi = Some(phi);
                    track.phi_rad = Some(phi);
                }
                TrackStatus::Tentative => {
                    if track.hits >= self.cfg.confirm_hits && self.moved_inward(&self.tracks[t]) {
                        self.confirm(t, frame);
                    }
                }
                TrackStatus::Exited => unreachable!("exited tracks are not associated"),
            }
        }
        for &t in &assoc.unmatched_tracks {
            let track = &mut self.tracks[t];
            track.misses += 1;
            track.hits = 0;
            if track.misses > self.cfg.max_misses {
                track.status = TrackStatus::Exited;
            }
        }
        // tentative tracks that exit were never people
        self.tracks
            .retain(|t| t.status != TrackStatus::Exited || t.is_confirmed());

        for &d in &assoc.unmatched_detections {
            let det = &detections[d];
            let id = self.next_id;
            self.next_id += 1;
            self.tracks.push(Track::new(
                id,
                TrackPoint {
                    frame_index: frame,
                    position: det.center_room,
                    axis_angle: det.axis_angle_rad,
                    center_px: det.center_px,
                    partial: det.partial,
                    phi: None,
                },
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(x: f64, y: f64) -> HeadDetection {
        HeadDetection {
            center_px: (100.0 + x * 100.0, 100.0 + y * 100.0),
            center_room: (x, y),
            ellipse_major_px: 30.0,
            ellipse_minor_px: 24.0,
            axis_angle_rad: 0.0,
            head_top_depth_mm: 1050.0,
            partial: false,
        }
    }

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn quadratic_prediction() {
        let t = Track::from_positions(1, &[(0, (0.0, 0.0)), (1, (1.0, 0.0)), (2, (3.0, 0.0))]);
        assert_eq!(predict_position(&t), (6.0, 0.0));
        let t = Track::from_positions(1, &[(0, (2.0, 2.0)), (1, (2.0, 2.0)), (2, (2.0, 2.0))]);
        assert_eq!(predict_position(&t), (2.0, 2.0));
        let t = Track::from_positions(1, &[(0, (0.0, 0.0)), (1, (1.0, 1.0)), (2, (2.0, 2.0))]);
        assert_eq!(predict_position(&t), (3.0, 3.0));
    }

    #[test]
    fn short_history_fallbacks() {
        let t = Track::from_positions(1, &[(4, (1.0, 2.0))]);
        assert_eq!(predict_position(&t), (1.0, 2.0));
        let t = Track::from_positions(1, &[(4, (1.0, 2.0)), (5, (1.5, 2.0))]);
        assert_eq!(predict_position(&t), (2.0, 2.0));
    }

    #[test]
    fn gating_and_ranking() {
        let dets = vec![det(1.0, 0.0), det(3.0, 0.0)];
        let g = gate((0.0, 0.0), &dets, 2.0);
        assert_eq!(g.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0]);
        let dets = vec![det(0.0, 0.4), det(0.2, 0.0)];
        let g = gate((0.0, 0.0), &dets, 2.0);
        assert_eq!(g.iter().map(|x| x.0).collect::<Vec<_>>(), vec![1, 0]);
        assert!(gate((0.0, 0.0), &[], 1.0).is_empty());
    }

    #[test]
    fn nearest_neighbour_wins() {
        let cfg = PipelineConfig::default();
        let tracks = vec![Track::from_positions(1, &[(0, (1.0, 1.0))])];
        let dets = vec![det(1.3, 1.0), det(1.1, 1.0)];
        let a = associate(&tracks, &dets, &cfg, 1);
        assert_eq!(a.matches, vec![(0, 1)]);
        assert_eq!(a.unmatched_detections, vec![0]);
    }

    #[test]
    fn overlap_uses_global_assignment() {
        // track 1 at (0,0), track 2 at (0.2,0); distances [[.1,.2],[.1,.4]]-like
        let cfg = PipelineConfig {
            gate_radius_m: 1.0,
            ..PipelineConfig::default()
        };
        let tracks = vec![
            Track::from_positions(1, &[(0, (0.0, 0.0))]),
            Track::from_positions(2, &[(0, (0.0, 1.0))]),
        ];
        // d0 at 0.1 from t0 and 0.1 from t1's... build from explicit distances
        let dets = vec![det(0.0, 0.45), det(0.0, -0.5)];
        // t0: d0 0.45, d1 0.5; t1: d0 0.55, d1 out of gate (1.5)
        let a = associate(&tracks, &dets, &cfg, 1);
        let mut m = a.matches.clone();
        m.sort();
        assert_eq!(m, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn no_detections_means_misses() {
        let cfg = PipelineConfig::default();
        let room = RoomModel::default();
        let mut tr = Tracker::new(&cfg, &room);
        tr.update(&[det(1.0, 1.0)], 0).unwrap();
        tr.update(&[], 1).unwrap();
        assert_eq!(tr.tracks()[0].misses, 1);
        assert!(tr.update(&[], 1).is_err());
    }

    #[test]
    fn direction_examples() {
        let max = deg(45.0);
        assert_eq!(resolve_direction(None, 0.0, Some(0.0), max), 0.0);
        assert!((resolve_direction(None, 0.0, Some(PI), max) - PI).abs() < 1e-12);
        let phi = resolve_direction(Some(deg(10.0)), deg(170.0), None, deg(90.0));
        assert!((phi - deg(350.0)).abs() < 1e-9);
        // equidistant candidates: the trajectory direction decides
        let phi = resolve_direction(Some(0.0), deg(90.0), Some(deg(260.0)), PI);
        assert!((phi - deg(270.0)).abs() < 1e-9);
        let phi = resolve_direction(Some(0.0), deg(90.0), Some(deg(80.0)), PI);
        assert!((phi - deg(90.0)).abs() < 1e-9);
        // clamped turn
        let phi = resolve_direction(Some(0.0), deg(80.0), None, max);
        assert!((phi - max).abs() < 1e-12);
    }

    #[test]
    fn straight_walk_gives_one_track() {
        let cfg = PipelineConfig::default();
        let room = RoomModel::default();
        let mut tr = Tracker::new(&cfg, &room);
        for k in 0..20u64 {
            let mut d = det(1.5 + 0.1 * k as f64, 2.5);
            d.axis_angle_rad = 0.02;
            tr.update(&[d], k).unwrap();
        }
        let confirmed: Vec<_> = tr.confirmed_tracks().collect();
        assert_eq!(confirmed.len(), 1);
        assert_eq!(confirmed[0].history.len(), 20);
        assert!(confirmed[0].history.iter().all(|p| (p.phi.unwrap() - 0.02).abs() < 1e-12));
    }

    #[test]
    fn border_flicker_never_confirms() {
        let cfg = PipelineConfig::default();
        let room = RoomModel::default();
        let mut tr = Tracker::new(&cfg, &room);
        for k in 0..3u64 {
            let mut d = det(0.2, 2.5);
            d.partial = true;
            d.center_px = (3.0 + 0.5 * (k % 2) as f64, 120.0);
            tr.update(&[d], k).unwrap();
        }
        assert_eq!(tr.confirmed_tracks().count(), 0);
    }

    proptest! {
        #[test]
        fn prediction_is_translation_equivariant(
            pts in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..6),
            tx in -3.0..3.0f64, ty in -3.0..3.0f64,
        ) {
            let h: Vec<_> = pts.iter().enumerate().map(|(i, &p)| (i as u64, p)).collect();
            let moved: Vec<_> = h.iter().map(|&(i, (x, y))| (i, (x + tx, y + ty))).collect();
            let a = predict_position(&Track::from_positions(1, &h));
            let b = predict_position(&Track::from_positions(1, &moved));
            prop_assert!((b.0 - a.0 - tx).abs() < 1e-9 && (b.1 - a.1 - ty).abs() < 1e-9);
        }

        #[test]
        fn disjoint_gates_equal_brute_force_nn(
            tracks in proptest::collection::vec((0.0..10.0f64, 0.0..10.0f64), 1..5),
            dets in proptest::collection::vec((0.0..10.0f64, 0.0..10.0f64), 0..8),
        ) {
            let cfg = PipelineConfig::default();
            let ts: Vec<Track> = tracks.iter().enumerate().map(|(i, &p)| Track::from_positions(i as u64, &[(0, p)])).collect();
            let ds: Vec<HeadDetection> = dets.iter().map(|&(x, y)| det(x, y)).collect();
            let claimed = |d: &HeadDetection| tracks.iter().filter(|t| ((t.0 - d.center_room.0).powi(2) + (t.1 - d.center_room.1).powi(2)).sqrt() <= cfg.gate_radius_m).count();
            prop_assume!(ds.iter().all(|d| claimed(d) <= 1));
            let a = associate(&ts, &ds, &cfg, 1);
            for (ti, t) in tracks.iter().enumerate() {
                // oracle: scan all detections for the nearest within the gate
                let mut best: Option<(usize, f64)> = None;
                for (di, d) in ds.iter().enumerate() {
                    let dist = ((t.0 - d.center_room.0).powi(2) + (t.1 - d.center_room.1).powi(2)).sqrt();
                    if dist <= cfg.gate_radius_m && best.is_none_or(|b| dist < b.1) {
                        best = Some((di, dist));
                    }
                }
                let got = a.matches.iter().find(|m| m.0 == ti).map(|m| m.1);
                prop_assert_eq!(got, best.map(|b| b.0));
            }
        }
    }
}
