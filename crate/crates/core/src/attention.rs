//! Focus-of-attention density over the room walls.
//!
//! A wall point inside the viewer's attention cone receives
//! `A = A(r) · A(|ψ−φ|) · A(v)` with `A(r) = 1/r`, `A(v) = 1/(κ + v)` and
//! `A(|ψ−φ|) = 1 + C2·|ψ−φ|`; points outside the cone receive nothing. Per
//! trajectory the instantaneous attention is summed over frames and
//! normalized over all wall points, then per-trajectory maps are summed and
//! normalized again. The distance constant `C1` never appears: the
//! normalization absorbs any positive scale.

use serde::Serialize;

use crate::angles::{bearing, circular_distance};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::room::{RoomModel, SignSpec, Wall, WallGrid};
use crate::trajectory::{sign_angles, OrientedState, OrientedTrajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionParams {
    pub cone_half_angle: f64,
    pub c2: f64,
    pub kappa: f64,
    pub min_distance_m: f64,
    pub fps: f64,
}

impl From<&PipelineConfig> for AttentionParams {
    fn from(cfg: &PipelineConfig) -> Self {
        Self {
            cone_half_angle: cfg.cone_half_angle_rad,
            c2: cfg.c2,
            kappa: cfg.kappa,
            min_distance_m: cfg.min_distance_m,
            fps: cfg.fps,
        }
    }
}

impl Default for AttentionParams {
    fn default() -> Self {
        (&PipelineConfig::default()).into()
    }
}

pub fn attention_distance(r: f64) -> Result<f64> {
    if r > 0.0 {
        Ok(1.0 / r)
    } else {
        Err(Error::Domain(r))
    }
}

pub fn attention_speed(v: f64, kappa: f64) -> f64 {
    1.0 / (kappa + v)
}

/// `1 + C2·d(ψ, φ)` with `d` the circular distance in `[0, π]`.
pub fn attention_angle(psi: f64, phi: f64, c2: f64) -> f64 {
    1.0 + c2 * circular_distance(psi, phi)
}

pub fn in_cone(state: &OrientedState, point: (f64, f64), half_angle: f64) -> bool {
    circular_distance(bearing(state.p_prime, point), state.phi) <= half_angle
}

/// Attention a wall point receives from one state. Zero outside the cone.
pub fn instantaneous_attention(state: &OrientedState, point: (f64, f64), params: &AttentionParams) -> Result<f64> {
    let r = ((point.0 - state.p_prime.0).powi(2) + (point.1 - state.p_prime.1).powi(2)).sqrt();
    if r < 1e-12 {
        return Err(Error::Domain(r));
    }
    if !in_cone(state, point, params.cone_half_angle) {
        return Ok(0.0);
    }
    Ok(attention_distance(r.max(params.min_distance_m))?
        * attention_angle(state.psi, state.phi, params.c2)
        * attention_speed(state.v, params.kappa))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    pub grid: WallGrid,
    pub values: Vec<f64>,
    pub normalized: bool,
}

impl AttentionMap {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Divides by the total mass. An all-zero map stays zero and is flagged
    /// unnormalizable.
    pub fn normalize(grid: &WallGrid, raw: Vec<f64>) -> Self {
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            Self {
                grid: grid.clone(),
                values: raw.into_iter().map(|x| x / total).collect(),
                normalized: true,
            }
        } else {
            Self {
                grid: grid.clone(),
                values: vec![0.0; raw.len()],
                normalized: false,
            }
        }
    }
}

// Index inside a wall's slice of the sample closest to `offset`.
fn nearest_in_wall(wall: Wall, n: usize, len: f64, offset: f64) -> usize {
    let spacing = len / n as f64;
    let j = ((offset / spacing).floor().max(0.0) as usize).min(n - 1);
    match wall {
        Wall::S | Wall::E => j,
        Wall::N | Wall::W => n - 1 - j,
    }
}

/// Where the gaze ray meets the wall line, as an offset along the wall.
fn gaze_hit(room: &RoomModel, wall: Wall, p: (f64, f64), phi: f64) -> Option<f64> {
    let (gx, gy) = (phi.cos(), phi.sin());
    let (fixed, p_fixed, g_fixed, p_along, g_along) = match wall {
        Wall::S => (0.0, p.1, gy, p.0, gx),
        Wall::N => (room.depth_m, p.1, gy, p.0, gx),
        Wall::W => (0.0, p.0, gx, p.1, gy),
        Wall::E => (room.width_m, p.0, gx, p.1, gy),
    };
    if g_fixed.abs() < 1e-12 {
        return None;
    }
    let s = (fixed - p_fixed) / g_fixed;
    (s > 0.0).then_some(p_along + s * g_along)
}

/// Adds one state's attention into `acc`, touching only the samples whose
/// direction lies in the cone. On a straight wall those form one contiguous
/// run, so the run is grown outward from a seed sample.
fn add_state(
    state: &OrientedState,
    room: &RoomModel,
    grid: &WallGrid,
    params: &AttentionParams,
    acc: &mut [f64],
) -> Result<()> {
    let samples = grid.samples();
    for wall in Wall::ALL {
        let range = grid.wall_range(wall);
        if range.is_empty() {
            continue;
        }
        let n = range.len();
        let len = room.wall_length(wall);
        let inside = |i: usize| in_cone(state, samples[i].point, params.cone_half_angle);

        let seed = match gaze_hit(room, wall, state.p_prime, state.phi) {
            Some(t) if (0.0..=len).contains(&t) => {
                let s = range.start + nearest_in_wall(wall, n, len, t);
                if inside(s) {
                    Some(s)
                } else {
                    // cone narrower than the sample spacing here: scan it all
                    for i in range.clone() {
                        acc[i] += instantaneous_attention(state, samples[i].point, params)?;
                    }
                    continue;
                }
            }
            // the in-cone run, if any, reaches a wall end
            _ => [range.start, range.end - 1].into_iter().find(|&i| inside(i)),
        };
        let Some(seed) = seed else { continue };

        acc[seed] += instantaneous_attention(state, samples[seed].point, params)?;
        let mut i = seed;
        while i > range.start && inside(i - 1) {
            i -= 1;
            acc[i] += instantaneous_attention(state, samples[i].point, params)?;
        }
        let mut i = seed;
        while i + 1 < range.end && inside(i + 1) {
            i += 1;
            acc[i] += instantaneous_attention(state, samples[i].point, params)?;
        }
    }
    Ok(())
}

/// Unnormalized per-sample attention of one trajectory.
pub fn raw_attention(traj: &OrientedTrajectory, room: &RoomModel, grid: &WallGrid, params: &AttentionParams) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; grid.len()];
    for state in &traj.states {
        add_state(state, room, grid, params, &mut acc)?;
    }
    Ok(acc)
}

/// Accumulated, normalized attention of one trajectory.
pub fn accumulate_trajectory(
    traj: &OrientedTrajectory,
    room: &RoomModel,
    grid: &WallGrid,
    params: &AttentionParams,
) -> Result<AttentionMap> {
    if traj.states.is_empty() {
        return Err(Error::Precondition(format!("trajectory {} is empty", traj.person_id)));
    }
    let raw = raw_attention(traj, room, grid, params)?;
    Ok(AttentionMap::normalize(grid, raw))
}

/// Sums normalized per-person maps and renormalizes. Maps that could not be
/// normalized (no wall attention at all) are skipped.
pub fn aggregate(maps: &[AttentionMap]) -> Result<AttentionMap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::Precondition("no attention maps to aggregate".into()))?;
    let mut sum = vec![0.0; first.values.len()];
    for m in maps {
        if !m.grid.same_grid(&first.grid) || m.values.len() != sum.len() {
            return Err(Error::GridMismatch);
        }
        if !m.normalized {
            continue;
        }
        for (s, v) in sum.iter_mut().zip(&m.values) {
            *s += v;
        }
    }
    Ok(AttentionMap::normalize(&first.grid, sum))
}

/// Seconds during which the sign center sits inside someone's cone.
pub fn attention_time(trajs: &[OrientedTrajectory], sign: &SignSpec, room: &RoomModel, params: &AttentionParams) -> f64 {
    let frames: usize = trajs
        .iter()
        .flat_map(|t| &t.states)
        .filter(|s| sign_angles(s, std::slice::from_ref(sign), room, params.cone_half_angle)[0].in_cone)
        .count();
    frames as f64 / params.fps
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignScore {
    pub id: String,
    /// Aggregated attention mass over the sign's samples.
    pub accumulated_attention: f64,
    /// Accumulated attention relative to the best sign, percent.
    pub relative_pct: f64,
    pub attention_time_s: f64,
    /// Attention time relative to the most watched sign, percent.
    pub attention_time_relative_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignReport {
    pub signs: Vec<SignScore>,
}

impl SignReport {
    /// Sign ids by decreasing accumulated attention (stable for ties).
    pub fn ranking(&self) -> Vec<String> {
        let mut idx: Vec<usize> = (0..self.signs.len()).collect();
        idx.sort_by(|&a, &b| {
            self.signs[b]
                .accumulated_attention
                .total_cmp(&self.signs[a].accumulated_attention)
        });
        idx.into_iter().map(|i| self.signs[i].id.clone()).collect()
    }

    /// Sign ids by decreasing attention time.
    pub fn time_ranking(&self) -> Vec<String> {
        let mut idx: Vec<usize> = (0..self.signs.len()).collect();
        idx.sort_by(|&a, &b| self.signs[b].attention_time_s.total_cmp(&self.signs[a].attention_time_s));
        idx.into_iter().map(|i| self.signs[i].id.clone()).collect()
    }
}

fn relative(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(0.0, f64::max);
    values
        .iter()
        .map(|v| if max > 0.0 { 100.0 * v / max } else { 0.0 })
        .collect()
}

pub fn sign_report(
    map: &AttentionMap,
    signs: &[SignSpec],
    trajectories: &[OrientedTrajectory],
    room: &RoomModel,
    params: &AttentionParams,
) -> SignReport {
    let member = map.grid.sign_membership(signs);
    let mut mass = vec![0.0; signs.len()];
    for (v, m) in map.values.iter().zip(&member) {
        if let Some(i) = m {
            mass[*i] += v;
        }
    }
    let times: Vec<f64> = signs
        .iter()
        .map(|s| attention_time(trajectories, s, room, params))
        .collect();
    let rel = relative(&mass);
    let rel_t = relative(&times);
    SignReport {
        signs: signs
            .iter()
            .enumerate()
            .map(|(i, s)| SignScore {
                id: s.id.clone(),
                accumulated_attention: mass[i],
                relative_pct: rel[i],
                attention_time_s: times[i],
                attention_time_relative_pct: rel_t[i],
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn state(p: (f64, f64), v: f64, psi: f64, phi: f64) -> OrientedState {
        OrientedState {
            frame_index: 0,
            p_prime: p,
            v,
            psi,
            phi,
            theta: None,
        }
    }

    fn traj(states: Vec<OrientedState>) -> OrientedTrajectory {
        OrientedTrajectory { person_id: 1, states }
    }

    #[test]
    fn factor_examples() {
        assert_eq!(attention_distance(1.0).unwrap(), 1.0);
        assert_eq!(attention_distance(2.0).unwrap(), 0.5);
        assert!(matches!(attention_distance(0.0), Err(Error::Domain(_))));
        assert_eq!(attention_speed(0.0, 0.1), 10.0);
        assert_eq!(attention_speed(0.9, 0.1), 1.0);
        assert_eq!(attention_angle(0.7, 0.7, 0.5), 1.0);
        assert!((attention_angle(0.0, FRAC_PI_2, 0.5) - (1.0 + 0.25 * PI)).abs() < 1e-15);
        let a = attention_angle(350f64.to_radians(), 10f64.to_radians(), 0.5);
        let b = attention_angle(0.0, 20f64.to_radians(), 0.5);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn speed_factor_decreasing() {
        let vs: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        for w in vs.windows(2) {
            assert!(attention_speed(w[1], 0.1) < attention_speed(w[0], 0.1));
        }
    }

    #[test]
    fn instantaneous_examples() {
        let p = AttentionParams::default();
        let s = state((2.5, 2.5), 0.9, FRAC_PI_2, FRAC_PI_2);
        assert_eq!(instantaneous_attention(&s, (2.5, 0.0), &p).unwrap(), 0.0);
        let a = instantaneous_attention(&s, (2.5, 4.5), &p).unwrap();
        assert!((a - 0.5).abs() < 1e-12);
        let l = instantaneous_attention(&s, (2.0, 4.5), &p).unwrap();
        let r = instantaneous_attention(&s, (3.0, 4.5), &p).unwrap();
        assert_eq!(l, r);
        assert!(instantaneous_attention(&s, (2.5, 2.5), &p).is_err());
        // clamp near the wall
        let near = state((2.5, 4.9), 0.9, FRAC_PI_2, FRAC_PI_2);
        let a = instantaneous_attention(&near, (2.5, 5.0), &p).unwrap();
        assert!((a - 1.0 / 0.3).abs() < 1e-12);
    }

    #[test]
    fn two_sample_normalization() {
        // a 2-sample wall layout: one sample on N, the others behind the viewer
        let room = RoomModel::default();
        let grid = room.wall_samples(5.0).unwrap();
        assert_eq!(grid.len(), 4);
        let p = AttentionParams {
            cone_half_angle: FRAC_PI_2,
            ..AttentionParams::default()
        };
        // facing the NE corner: N and E samples are symmetric
        let s = state((2.5, 2.5), 0.0, PI / 4.0, PI / 4.0);
        let m = accumulate_trajectory(&traj(vec![s]), &room, &grid, &p).unwrap();
        let e = grid.wall_range(Wall::E).start;
        let n = grid.wall_range(Wall::N).start;
        assert!((m.values[e] - 0.5).abs() < 1e-12);
        assert!((m.values[n] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn looking_at_nothing_is_unnormalizable() {
        let room = RoomModel::default();
        let grid = room.wall_samples(1.0).unwrap();
        let p = AttentionParams {
            cone_half_angle: 0.001,
            ..AttentionParams::default()
        };
        // gaze straight at a corner between samples
        let s = state((2.5, 2.5), 0.0, 0.0, PI / 4.0);
        let m = accumulate_trajectory(&traj(vec![s]), &room, &grid, &p).unwrap();
        assert!(!m.normalized);
        assert!(m.values.iter().all(|v| *v == 0.0));
        assert!(accumulate_trajectory(&traj(vec![]), &room, &grid, &p).is_err());
    }

    #[test]
    fn aggregation_examples() {
        let room = RoomModel::default();
        let grid = room.wall_samples(5.0).unwrap();
        let mk = |v: Vec<f64>| AttentionMap::normalize(&grid, v);
        let a = mk(vec![1.0, 0.0, 0.0, 0.0]);
        let b = mk(vec![0.0, 1.0, 0.0, 0.0]);
        let s = aggregate(&[a.clone(), b]).unwrap();
        assert_eq!(s.values, vec![0.5, 0.5, 0.0, 0.0]);
        let same = aggregate(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(same.values, a.values);
        let zero = mk(vec![0.0; 4]);
        assert_eq!(aggregate(&[zero, a.clone()]).unwrap().values, a.values);

        let other = room.wall_samples(1.0).unwrap();
        let c = AttentionMap::normalize(&other, vec![1.0; other.len()]);
        assert!(matches!(aggregate(&[a, c]), Err(Error::GridMismatch)));
    }

    fn signs(room: &RoomModel) -> Vec<SignSpec> {
        crate::config::default_signs(room)
    }

    #[test]
    fn dwell_on_one_sign() {
        // stationary viewer 2 m from the N sign, facing it
        let room = RoomModel::default();
        let grid = room.wall_samples(0.05).unwrap();
        let p = AttentionParams::default();
        let st: Vec<_> = (0..10u64)
            .map(|k| OrientedState {
                frame_index: k,
                ..state((2.5, 3.0), 0.0, FRAC_PI_2, FRAC_PI_2)
            })
            .collect();
        let t = traj(st);
        let m = accumulate_trajectory(&t, &room, &grid, &p).unwrap();
        let sg = signs(&room);
        let rep = sign_report(&m, &sg, std::slice::from_ref(&t), &room, &p);
        assert_eq!(rep.ranking()[0], "orange");
        assert_eq!(rep.signs[0].relative_pct, 100.0);
        assert!(rep.signs[1..].iter().all(|s| s.relative_pct == 0.0));
        assert_eq!(rep.signs[0].attention_time_s, 2.5);

        // closed form: the mass on the sign over the mass on all in-cone samples
        let cone = 30f64.to_radians();
        let mut in_sign = 0.0;
        let mut total = 0.0;
        for s in grid.samples() {
            let (dx, dy) = (s.point.0 - 2.5, s.point.1 - 3.0);
            let ang = (dx.atan2(dy)).abs(); // angle from +y
            if s.wall == Wall::N && ang <= cone {
                let a = 1.0 / (dx * dx + dy * dy).sqrt();
                total += a;
                if (s.offset - 2.5).abs() <= 0.105 {
                    in_sign += a;
                }
            }
        }
        assert!((rep.signs[0].accumulated_attention - in_sign / total).abs() < 1e-12);
    }

    #[test]
    fn attention_time_counts_frames() {
        let room = RoomModel::default();
        let p = AttentionParams::default();
        let sg = signs(&room);
        let facing: Vec<_> = (0..40u64)
            .map(|k| OrientedState {
                frame_index: k,
                ..state((2.5, 2.5), 0.0, 0.0, FRAC_PI_2)
            })
            .collect();
        let t = traj(facing);
        assert_eq!(attention_time(std::slice::from_ref(&t), &sg[0], &room, &p), 10.0);
        assert_eq!(attention_time(std::slice::from_ref(&t), &sg[3], &room, &p), 0.0);
    }

    /// Direct evaluation: every sample, every state.
    fn brute_force(t: &OrientedTrajectory, grid: &WallGrid, p: &AttentionParams) -> Vec<f64> {
        let mut raw = vec![0.0; grid.len()];
        for (j, s) in grid.samples().iter().enumerate() {
            for st in &t.states {
                let r = ((s.point.0 - st.p_prime.0).powi(2) + (s.point.1 - st.p_prime.1).powi(2)).sqrt();
                let ang = (s.point.1 - st.p_prime.1).atan2(s.point.0 - st.p_prime.0);
                let mut d = (ang - st.phi).rem_euclid(2.0 * PI);
                if d > PI {
                    d = 2.0 * PI - d;
                }
                if d <= p.cone_half_angle {
                    let mut dpsi = (st.psi - st.phi).rem_euclid(2.0 * PI);
                    if dpsi > PI {
                        dpsi = 2.0 * PI - dpsi;
                    }
                    raw[j] += (1.0 / r.max(p.min_distance_m)) * (1.0 + p.c2 * dpsi) / (p.kappa + st.v);
                }
            }
        }
        raw
    }

    fn arb_state() -> impl Strategy<Value = OrientedState> {
        (0.2..4.8f64, 0.2..4.8f64, 0.0..2.0f64, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU)
            .prop_map(|(x, y, v, psi, phi)| state((x, y), v, psi, phi))
    }

    proptest! {
        #[test]
        fn cone_walk_equals_full_scan(states in proptest::collection::vec(arb_state(), 1..8), half in 0.1..std::f64::consts::FRAC_PI_2, step in 0.02..0.6f64) {
            let room = RoomModel::default();
            let grid = room.wall_samples(step).unwrap();
            let p = AttentionParams {
                cone_half_angle: half,
                ..AttentionParams::default()
            };
            let t = traj(states);
            let fast = raw_attention(&t, &room, &grid, &p).unwrap();
            let slow = brute_force(&t, &grid, &p);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{} vs {}", a, b);
            }
        }

        #[test]
        fn cone_gating(s in arb_state(), j in 0usize..400) {
            let room = RoomModel::default();
            let grid = room.wall_samples(0.05).unwrap();
            let p = AttentionParams::default();
            let pt = grid.samples()[j].point;
            let a = instantaneous_attention(&s, pt, &p).unwrap();
            if in_cone(&s, pt, p.cone_half_angle) {
                prop_assert!(a > 0.0);
            } else {
                prop_assert_eq!(a, 0.0);
            }
        }

        #[test]
        fn monotone_factors(r1 in 0.31..5.0f64, dr in 0.01..2.0f64, v in 0.0..3.0f64, dv in 0.01..1.0f64, d in 0.0..3.0f64, dd in 0.01..0.1f64) {
            let p = AttentionParams::default();
            let at = |r: f64, v: f64, dpsi: f64| {
                let s = state((0.0, 0.0), v, dpsi, 0.0);
                instantaneous_attention(&s, (r, 0.0), &p).unwrap()
            };
            let dd = dd.min(PI - d);
            prop_assert!(at(r1 + dr, v, d) < at(r1, v, d));
            prop_assert!(at(r1, v + dv, d) < at(r1, v, d));
            if dd > 0.0 {
                prop_assert!(at(r1, v, d + dd) > at(r1, v, d));
            }
        }
    }
}
