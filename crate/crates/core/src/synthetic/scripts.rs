//! Built-in scenarios and the canonical bodies behind the reference
//! histograms.

use super::render::render_person;
use super::{HeadKey, PersonGeometry, Projection, Prop, ScenarioScript, ScriptedPerson, Waypoint, DEFAULT_NOISE_MM};
use crate::config::Config;
use crate::detection::{blob_histogram, extract_blobs, subtract_background, DepthHistogram};
use crate::error::{Error, Result};
use crate::room::RoomModel;

fn geometry(height_m: f64, head: (f64, f64), shoulder_width_m: f64, drop_m: f64) -> PersonGeometry {
    PersonGeometry {
        height_m,
        head_radius_major_m: head.0,
        head_radius_minor_m: head.1,
        shoulder_width_m,
        shoulder_depth_drop_m: drop_m,
        ..PersonGeometry::default()
    }
}

fn person(geometry: PersonGeometry, path: &[(u64, f64, f64)], head_deg: &[(u64, f64)]) -> ScriptedPerson {
    ScriptedPerson {
        geometry,
        waypoints: path
            .iter()
            .map(|&(frame, x, y)| Waypoint { frame, position: (x, y) })
            .collect(),
        head: head_deg
            .iter()
            .map(|&(frame, d)| HeadKey { frame, phi: d.to_radians() })
            .collect(),
    }
}

fn scenario(name: &str, seed: u64, duration_frames: u64, persons: Vec<ScriptedPerson>) -> ScenarioScript {
    ScenarioScript {
        name: name.to_string(),
        persons,
        props: Vec::new(),
        duration_frames,
        noise_sigma_mm: DEFAULT_NOISE_MM,
        seed,
        projection: Projection::Nadir,
    }
}

/// Nine single-person scenarios, about two minutes of footage at 4 fps:
/// people walk in from a border, stop to look at the signs, and walk out.
pub fn default_scripts() -> Vec<ScenarioScript> {
    vec![
        scenario(
            "west_east_browse",
            11,
            50,
            vec![person(
                geometry(1.75, (0.100, 0.078), 0.44, 0.28),
                &[(0, 1.0, 2.4), (12, 2.3, 2.4), (32, 2.3, 2.45), (49, 4.0, 2.5)],
                &[(12, 0.0), (15, 90.0), (21, 90.0), (24, 0.0), (27, 0.0), (30, -90.0), (33, -90.0), (36, 0.0)],
            )],
        ),
        scenario(
            "east_west_browse",
            12,
            52,
            vec![person(
                geometry(1.68, (0.098, 0.076), 0.42, 0.27),
                &[(0, 4.0, 2.6), (13, 2.7, 2.6), (33, 2.7, 2.6), (51, 1.0, 2.7)],
                &[(13, 180.0), (16, 90.0), (20, 90.0), (24, 180.0), (26, 180.0), (29, 270.0), (33, 270.0), (36, 180.0)],
            )],
        ),
        scenario(
            "south_north_browse",
            13,
            54,
            vec![person(
                geometry(1.82, (0.104, 0.080), 0.47, 0.29),
                &[(0, 2.4, 0.9), (14, 2.5, 2.3), (34, 2.5, 2.3), (53, 2.6, 4.1)],
                &[(14, 86.0), (17, 0.0), (23, 0.0), (29, 180.0), (33, 180.0), (36, 90.0)],
            )],
        ),
        scenario(
            "north_south_browse",
            14,
            54,
            vec![person(
                geometry(1.60, (0.095, 0.074), 0.40, 0.26),
                &[(0, 2.6, 4.1), (14, 2.5, 2.7), (32, 2.5, 2.7), (53, 2.4, 0.9)],
                &[(14, 266.0), (17, 180.0), (22, 180.0), (28, 360.0), (32, 360.0), (35, 270.0)],
            )],
        ),
        scenario(
            "diagonal_sw_ne",
            15,
            52,
            vec![person(
                geometry(1.90, (0.105, 0.082), 0.48, 0.30),
                &[(0, 1.1, 1.3), (14, 2.2, 2.3), (30, 2.2, 2.3), (51, 3.9, 3.7)],
                &[(14, 42.0), (16, 90.0), (21, 90.0), (24, 0.0), (29, 0.0), (31, 40.0)],
            )],
        ),
        scenario(
            "diagonal_ne_sw",
            16,
            52,
            vec![person(
                geometry(1.72, (0.100, 0.076), 0.50, 0.28),
                &[(0, 3.9, 3.7), (14, 2.8, 2.7), (30, 2.8, 2.7), (51, 1.1, 1.3)],
                &[(14, 222.0), (16, 180.0), (22, 180.0), (25, 270.0), (29, 270.0), (31, 222.0)],
            )],
        ),
        scenario(
            "slow_stroll",
            17,
            54,
            vec![person(
                geometry(1.78, (0.102, 0.079), 0.45, 0.28),
                &[(0, 1.0, 2.7), (53, 4.0, 2.3)],
                &[(0, 352.0), (14, 352.0), (17, 60.0), (24, 60.0), (27, 352.0), (30, 352.0), (33, 290.0), (40, 290.0), (43, 352.0)],
            )],
        ),
        scenario(
            "two_stops",
            18,
            54,
            vec![person(
                geometry(1.65, (0.097, 0.075), 0.41, 0.27),
                &[(0, 3.9, 1.3), (10, 3.0, 2.0), (20, 3.0, 2.0), (30, 2.0, 2.8), (40, 2.0, 2.8), (53, 1.0, 3.8)],
                &[(10, 142.0), (13, 90.0), (19, 90.0), (22, 142.0), (30, 142.0), (33, 180.0), (39, 180.0), (42, 135.0)],
            )],
        ),
        scenario(
            "long_pass",
            19,
            54,
            vec![person(
                geometry(1.85, (0.103, 0.080), 0.46, 0.29),
                &[(0, 2.2, 4.1), (53, 2.8, 0.9)],
                &[(0, 281.0), (18, 281.0), (21, 350.0), (30, 350.0), (33, 281.0)],
            )],
        ),
    ]
}

/// Head directions, one per frame, of the sign-ranking viewer: a walk-in
/// looking between signs, then dwells on the south, east, west and north
/// signs whose in-cone frame counts are 20, 12, 6 and 2 (50/30/15/5%).
fn ranking_head_deg() -> Vec<f64> {
    let mut phi = vec![50.0; 13];
    phi.push(25.0);
    phi.extend([0.0; 10]);
    phi.extend([-25.0, -50.0, -75.0]);
    phi.extend([-90.0; 18]);
    phi.extend([-115.0, -140.0, -165.0]);
    phi.extend([-180.0; 4]);
    phi.extend([-205.0, -230.0, -255.0]);
    phi.push(-270.0);
    phi
}

/// One viewer who walks in from the south, stops under the camera, and
/// shares the dwell between the four default signs.
pub fn ranking_script() -> ScenarioScript {
    let head = ranking_head_deg();
    let last = head.len() as u64 - 1;
    let keys: Vec<(u64, f64)> = head.iter().enumerate().map(|(k, &d)| (k as u64, d)).collect();
    scenario(
        "sign_ranking",
        21,
        last + 1,
        vec![person(PersonGeometry::default(), &[(0, 2.5, 1.0), (12, 2.5, 2.5), (last, 2.5, 2.5)], &keys)],
    )
}

/// A still box next to a walking person.
pub fn prop_script() -> ScenarioScript {
    let mut s = scenario(
        "box_and_walker",
        22,
        20,
        vec![person(PersonGeometry::default(), &[(0, 1.6, 2.7), (19, 3.4, 2.7)], &[])],
    );
    s.props.push(Prop {
        center_m: [2.5, 2.1],
        size_m: [0.45, 0.35],
        height_m: 0.75,
    });
    s
}

/// Canonical bodies: average, tall, short, broad, narrow.
pub fn reference_geometries() -> Vec<PersonGeometry> {
    vec![
        geometry(1.74, (0.100, 0.078), 0.44, 0.28),
        geometry(1.88, (0.104, 0.081), 0.47, 0.30),
        geometry(1.60, (0.095, 0.074), 0.40, 0.26),
        geometry(1.80, (0.102, 0.080), 0.52, 0.29),
        geometry(1.67, (0.096, 0.075), 0.38, 0.27),
    ]
}

/// Depth histograms of the reference bodies standing under the camera,
/// rendered without noise.
pub fn reference_histograms(cfg: &Config) -> Result<Vec<DepthHistogram>> {
    let room: &RoomModel = &cfg.room;
    let p = &cfg.pipeline;
    let bg = super::render_background(room);
    let center = room.pixel_to_room(room.principal_point.0, room.principal_point.1, 1000.0)?;
    reference_geometries()
        .iter()
        .map(|g| {
            let out = render_person(g, center, 0.0, room)?;
            let mask = subtract_background(&out.frame, &bg, p.bg_delta_mm)?;
            let blob = extract_blobs(&mask, p.min_blob_px)
                .into_iter()
                .next()
                .ok_or_else(|| Error::Precondition("reference body produced no blob".into()))?;
            blob_histogram(&out.frame, &blob, p.hist_bins, p.hist_range_mm)
        })
        .collect()
}
