//! Ground truth computed from the schedules, never from rendered pixels.

use super::{PersonGeometry, ScenarioScript};
use crate::attention::{accumulate_trajectory, aggregate, sign_report, AttentionMap, AttentionParams, SignReport};
use crate::config::Config;
use crate::error::Result;
use crate::room::RoomModel;
use crate::trajectory::{states_from_samples, OrientedState, OrientedTrajectory};

#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Per scripted person, every scheduled frame.
    pub full_states: Vec<Vec<OrientedState>>,
    /// Per person with at least two in-view frames: the states whose head
    /// center projects into the image. `person_id` is the script index.
    pub trajectories: Vec<OrientedTrajectory>,
    pub map: Option<AttentionMap>,
    pub report: Option<SignReport>,
}

/// Whether the head center, projected at head-top depth, lands in the image.
pub fn head_in_view(room: &RoomModel, geometry: &PersonGeometry, pos: (f64, f64)) -> bool {
    let depth = (room.camera_height_m - geometry.height_m) * 1000.0;
    let Ok((u, v)) = room.room_to_pixel(pos.0, pos.1, depth) else {
        return false;
    };
    let (w, h) = room.image_size;
    u >= 0.0 && v >= 0.0 && u <= (w - 1) as f64 && v <= (h - 1) as f64
}

/// Exact oriented states, attention map and sign report of a script.
pub fn ground_truth(script: &ScenarioScript, cfg: &Config) -> Result<GroundTruth> {
    let room = &cfg.room;
    let params = AttentionParams::from(&cfg.pipeline);
    let grid = room.wall_samples(cfg.pipeline.wall_step_m)?;
    let mut full_states = Vec::new();
    let mut trajectories = Vec::new();
    for (i, p) in script.persons.iter().enumerate() {
        let samples: Vec<_> = (p.first_frame()..=p.last_frame())
            .filter_map(|k| p.position(k).map(|pos| (k, pos, p.phi(k))))
            .collect();
        let states = states_from_samples(&samples, cfg.pipeline.fps, cfg.pipeline.standstill_m);
        let visible: Vec<OrientedState> = states
            .iter()
            .filter(|s| head_in_view(room, &p.geometry, s.p_prime))
            .copied()
            .collect();
        if visible.len() >= 2 {
            trajectories.push(OrientedTrajectory {
                person_id: i as u64,
                states: visible,
            });
        }
        full_states.push(states);
    }
    let maps = trajectories
        .iter()
        .map(|t| accumulate_trajectory(t, room, &grid, &params))
        .collect::<Result<Vec<_>>>()?;
    let map = if maps.is_empty() { None } else { Some(aggregate(&maps)?) };
    let report = map
        .as_ref()
        .map(|m| sign_report(m, &cfg.signs, &trajectories, room, &params));
    Ok(GroundTruth {
        full_states,
        trajectories,
        map,
        report,
    })
}
