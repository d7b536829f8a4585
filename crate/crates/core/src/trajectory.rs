//! Oriented trajectories: per-frame state `[p′, v, ψ, φ, θ]` of a tracked
//! person in room coordinates, plus the viewing angle toward each sign.

use serde::{Deserialize, Serialize};

use crate::angles::{bearing, circular_distance, wrap_2pi};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::room::{RoomModel, SignSpec};
use crate::tracking::Track;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedState {
    pub frame_index: u64,
    /// Head position on the floor plane, meters.
    pub p_prime: (f64, f64),
    /// Speed, m/s.
    pub v: f64,
    /// Trajectory direction in `[0, 2π)`.
    pub psi: f64,
    /// Planar head direction in `[0, 2π)`.
    pub phi: f64,
    /// Pitch. Carried for completeness; nothing here estimates it.
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientedTrajectory {
    pub person_id: u64,
    pub states: Vec<OrientedState>,
}

impl OrientedTrajectory {
    pub fn duration_s(&self, fps: f64) -> f64 {
        self.states.len() as f64 / fps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignObservation {
    pub frame_index: u64,
    pub sign_id: String,
    pub rho: f64,
    pub in_cone: bool,
}

/// Builds states from raw `(frame, position, phi)` samples.
///
/// Speed is the backward difference times the frame rate (the first state
/// copies the second). The trajectory direction follows the backward
/// displacement and is held while the per-frame displacement stays under
/// `standstill_m`; before the first real displacement it takes the first
/// direction observed, or the head direction if the person never moves.
pub fn states_from_samples(samples: &[(u64, (f64, f64), f64)], fps: f64, standstill_m: f64) -> Vec<OrientedState> {
    let n = samples.len();
    let mut states = Vec::with_capacity(n);
    let mut steps: Vec<(f64, Option<f64>)> = Vec::with_capacity(n);
    for k in 1..n {
        let (f0, p0, _) = samples[k - 1];
        let (f1, p1, _) = samples[k];
        let frames = (f1 - f0).max(1) as f64;
        let dist = ((p1.0 - p0.0).powi(2) + (p1.1 - p0.1).powi(2)).sqrt();
        let dir = (dist / frames >= standstill_m).then(|| bearing(p0, p1));
        steps.push((dist * fps / frames, dir));
    }
    let first_dir = steps
        .iter()
        .find_map(|s| s.1)
        .unwrap_or_else(|| samples.first().map_or(0.0, |s| wrap_2pi(s.2)));

    let mut psi = first_dir;
    for (k, &(frame_index, p_prime, phi)) in samples.iter().enumerate() {
        let v = match k {
            0 => steps.first().map_or(0.0, |s| s.0),
            _ => steps[k - 1].0,
        };
        if k > 0 {
            if let Some(d) = steps[k - 1].1 {
                psi = d;
            }
        }
        states.push(OrientedState {
            frame_index,
            p_prime,
            v,
            psi,
            phi: wrap_2pi(phi),
            theta: None,
        });
    }
    states
}

fn smooth3(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            let w = (hi - lo + 1) as f64;
            let (sx, sy) = points[lo..=hi]
                .iter()
                .fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
            (sx / w, sy / w)
        })
        .collect()
}

/// Converts a confirmed track into its oriented trajectory.
pub fn build_trajectory(track: &Track, _room: &RoomModel, cfg: &PipelineConfig) -> Result<OrientedTrajectory> {
    if track.history.len() < 2 {
        return Err(Error::TrackTooShort(track.history.len()));
    }
    if !track.is_confirmed() {
        return Err(Error::Precondition(format!("track {} is not confirmed", track.id)));
    }
    let mut positions: Vec<(f64, f64)> = track.history.iter().map(|p| p.position).collect();
    if cfg.smooth_positions {
        positions = smooth3(&positions);
    }
    let samples: Vec<(u64, (f64, f64), f64)> = track
        .history
        .iter()
        .zip(positions)
        .map(|(p, pos)| (p.frame_index, pos, p.phi.unwrap_or(0.0)))
        .collect();
    Ok(OrientedTrajectory {
        person_id: track.id,
        states: states_from_samples(&samples, cfg.fps, cfg.standstill_m),
    })
}

/// Viewing angle from the head to each sign center, and whether that center
/// falls inside the attention cone.
pub fn sign_angles(state: &OrientedState, signs: &[SignSpec], room: &RoomModel, cone_half_angle: f64) -> Vec<SignObservation> {
    signs
        .iter()
        .map(|s| {
            let rho = bearing(state.p_prime, s.center(room));
            SignObservation {
                frame_index: state.frame_index,
                sign_id: s.id.clone(),
                rho,
                in_cone: circular_distance(rho, state.phi) <= cone_half_angle,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::room::Wall;
    use crate::tracking::Track;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn confirmed(points: &[(u64, (f64, f64))], phi: f64) -> Track {
        let mut t = Track::from_positions(7, points);
        for p in &mut t.history {
            p.phi = Some(phi);
        }
        t.confirmed_at = Some(points[points.len() - 1].0);
        t
    }

    #[test]
    fn straight_walk() {
        let pts: Vec<_> = (0..8).map(|k| (k as u64, (1.0 + 0.25 * k as f64, 2.0))).collect();
        let traj = build_trajectory(&confirmed(&pts, 0.0), &RoomModel::default(), &PipelineConfig::default()).unwrap();
        assert_eq!(traj.states.len(), 8);
        for s in &traj.states {
            assert!((s.v - 1.0).abs() < 1e-12);
            assert_eq!(s.psi, 0.0);
            assert!(s.theta.is_none());
        }
    }

    #[test]
    fn standstill_holds_psi() {
        let samples: Vec<_> = (0..6u64)
            .map(|k| {
                let pos = if k < 2 { (1.0 + 0.1 * k as f64, 1.0) } else { (1.1, 1.0) };
                (k, pos, 0.3 * k as f64)
            })
            .collect();
        let st = states_from_samples(&samples, 4.0, 0.01);
        for s in &st[2..] {
            assert_eq!(s.v, 0.0);
            assert_eq!(s.psi, 0.0);
        }
        assert!((st[5].phi - 1.5).abs() < 1e-12);

        let still: Vec<_> = (0..4u64).map(|k| (k, (2.0, 2.0), 1.0)).collect();
        let st = states_from_samples(&still, 4.0, 0.01);
        assert!(st.iter().all(|s| s.v == 0.0 && s.psi == 1.0));
    }

    #[test]
    fn short_or_unconfirmed_tracks_fail() {
        let t = confirmed(&[(0, (1.0, 1.0))], 0.0);
        assert!(matches!(
            build_trajectory(&t, &RoomModel::default(), &PipelineConfig::default()),
            Err(Error::TrackTooShort(1))
        ));
        let t = Track::from_positions(1, &[(0, (1.0, 1.0)), (1, (1.1, 1.0))]);
        assert!(build_trajectory(&t, &RoomModel::default(), &PipelineConfig::default()).is_err());
    }

    #[test]
    fn smoothing_flag() {
        let pts = vec![(0u64, (0.0, 0.0)), (1, (0.3, 0.0)), (2, (0.3, 0.3))];
        let cfg = PipelineConfig {
            smooth_positions: true,
            ..PipelineConfig::default()
        };
        let traj = build_trajectory(&confirmed(&pts, 0.0), &RoomModel::default(), &cfg).unwrap();
        assert!((traj.states[1].p_prime.0 - 0.2).abs() < 1e-12);
        assert!((traj.states[1].p_prime.1 - 0.1).abs() < 1e-12);
    }

    fn sign(id: &str, wall: Wall) -> SignSpec {
        SignSpec {
            id: id.into(),
            wall,
            center_offset_m: 2.5,
            width_m: 0.21,
            mount_height_m: None,
        }
    }

    #[test]
    fn facing_a_sign() {
        let room = RoomModel::default();
        let state = OrientedState {
            frame_index: 0,
            p_prime: (2.5, 2.5),
            v: 0.0,
            psi: 0.0,
            phi: FRAC_PI_2,
            theta: None,
        };
        let obs = sign_angles(&state, &[sign("n", Wall::N), sign("s", Wall::S)], &room, 30f64.to_radians());
        assert!((obs[0].rho - state.phi).abs() < 1e-12);
        assert!(obs[0].in_cone);
        assert!((obs[1].rho - 1.5 * PI).abs() < 1e-12);
        assert!(!obs[1].in_cone);
    }

    proptest! {
        #[test]
        fn cone_membership_matches_direct_check(x in 0.3..4.7f64, y in 0.3..4.7f64, phi in 0.0..std::f64::consts::TAU, half in 0.05..1.57f64) {
            let room = RoomModel::default();
            let signs: Vec<_> = Wall::ALL.iter().map(|&w| sign(&w.to_string(), w)).collect();
            let state = OrientedState { frame_index: 0, p_prime: (x, y), v: 0.0, psi: 0.0, phi, theta: None };
            for (o, s) in sign_angles(&state, &signs, &room, half).iter().zip(&signs) {
                let c = s.center(&room);
                let (vx, vy) = (c.0 - x, c.1 - y);
                let cos = (vx * phi.cos() + vy * phi.sin()) / (vx * vx + vy * vy).sqrt();
                let ang = cos.clamp(-1.0, 1.0).acos();
                if (ang - half).abs() > 1e-9 {
                    prop_assert_eq!(o.in_cone, ang <= half);
                }
            }
        }

        #[test]
        fn speed_and_heading_are_translation_invariant(
            steps in proptest::collection::vec((-0.3..0.3f64, -0.3..0.3f64), 2..10),
            tx in -2.0..2.0f64, ty in -2.0..2.0f64,
        ) {
            let mut p = (1.0, 1.0);
            let mut a = Vec::new();
            for (k, s) in steps.iter().enumerate() {
                p = (p.0 + s.0, p.1 + s.1);
                a.push((k as u64, p, 0.5));
            }
            let b: Vec<_> = a.iter().map(|&(k, q, phi)| (k, (q.0 + tx, q.1 + ty), phi)).collect();
            let sa = states_from_samples(&a, 4.0, 0.01);
            let sb = states_from_samples(&b, 4.0, 0.01);
            for (x, y) in sa.iter().zip(&sb) {
                prop_assert!((x.v - y.v).abs() < 1e-9);
                prop_assert!(circular_distance(x.psi, y.psi) < 1e-6);
            }
        }

        #[test]
        fn heading_rotates_with_the_scene(
            steps in proptest::collection::vec((0.05..0.3f64, -0.3..0.3f64), 2..8),
            rot in 0.0..std::f64::consts::TAU,
        ) {
            let (s, c) = rot.sin_cos();
            let mut p = (0.0, 0.0);
            let mut a = Vec::new();
            for (k, st) in steps.iter().enumerate() {
                p = (p.0 + st.0, p.1 + st.1);
                a.push((k as u64, p, 0.4));
            }
            let b: Vec<_> = a.iter().map(|&(k, q, phi)| (k, (c * q.0 - s * q.1, s * q.0 + c * q.1), phi + rot)).collect();
            let sa = states_from_samples(&a, 4.0, 0.01);
            let sb = states_from_samples(&b, 4.0, 0.01);
            for (x, y) in sa.iter().zip(&sb) {
                prop_assert!(circular_distance(wrap_2pi(x.psi + rot), y.psi) < 1e-6);
                prop_assert!(circular_distance(wrap_2pi(x.phi + rot), y.phi) < 1e-6);
                prop_assert!((x.v - y.v).abs() < 1e-9);
            }
        }
    }
}
