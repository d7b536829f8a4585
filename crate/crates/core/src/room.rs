//! Room geometry: the rectangular room, the nadir camera above it, the signs on
//! its walls, and the discretized wall perimeter on which attention lives.
//!
//! Room coordinates have their origin at a floor corner, `x` along the room
//! width and `y` along its depth. The camera is axis-aligned with the room, so
//! image `u` grows with `x` and image `v` grows with `y`.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tallest person the camera placement has to clear.
pub const MAX_PERSON_HEIGHT_M: f64 = 2.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wall {
    /// `y = 0`
    S,
    /// `x = width`
    E,
    /// `y = depth`
    N,
    /// `x = 0`
    W,
}

impl Wall {
    /// Perimeter traversal order (counter-clockwise seen from above with `y` up).
    pub const ALL: [Wall; 4] = [Wall::S, Wall::E, Wall::N, Wall::W];

    fn index(self) -> usize {
        match self {
            Wall::S => 0,
            Wall::E => 1,
            Wall::N => 2,
            Wall::W => 3,
        }
    }
}

impl fmt::Display for Wall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Wall::S => "S",
            Wall::E => "E",
            Wall::N => "N",
            Wall::W => "W",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomModel {
    pub width_m: f64,
    pub depth_m: f64,
    pub camera_position: (f64, f64),
    pub camera_height_m: f64,
    pub focal_px: f64,
    pub principal_point: (f64, f64),
    pub image_size: (usize, usize),
}

impl Default for RoomModel {
    fn default() -> Self {
        Self {
            width_m: 5.0,
            depth_m: 5.0,
            camera_position: (2.5, 2.5),
            camera_height_m: 2.8,
            focal_px: 160.0,
            principal_point: (159.5, 119.5),
            image_size: (320, 240),
        }
    }
}

impl RoomModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.width_m > 0.0) {
            return Err(Error::invariant("width_m", format!("must be > 0, got {}", self.width_m)));
        }
        if !(self.depth_m > 0.0) {
            return Err(Error::invariant("depth_m", format!("must be > 0, got {}", self.depth_m)));
        }
        let (cx, cy) = self.camera_position;
        if !(cx > 0.0 && cx < self.width_m && cy > 0.0 && cy < self.depth_m) {
            return Err(Error::invariant(
                "camera_position",
                format!("({cx}, {cy}) is not inside the room"),
            ));
        }
        if !(self.camera_height_m > MAX_PERSON_HEIGHT_M) {
            return Err(Error::invariant(
                "camera_height_m",
                format!("must exceed {MAX_PERSON_HEIGHT_M} m, got {}", self.camera_height_m),
            ));
        }
        if !(self.focal_px > 0.0) {
            return Err(Error::invariant("focal_px", format!("must be > 0, got {}", self.focal_px)));
        }
        if self.image_size.0 == 0 || self.image_size.1 == 0 {
            return Err(Error::invariant("image_size", "must be non-zero"));
        }
        Ok(())
    }

    /// Back-projects a pixel at a known vertical depth onto the floor plane.
    pub fn pixel_to_room(&self, u: f64, v: f64, depth_mm: f64) -> Result<(f64, f64)> {
        if depth_mm <= 0.0 {
            return Err(Error::InvalidDepth);
        }
        if depth_mm > self.camera_height_m * 1000.0 {
            return Err(Error::Precondition(format!(
                "depth {depth_mm} mm is below the floor"
            )));
        }
        let z = depth_mm / 1000.0;
        let (u0, v0) = self.principal_point;
        Ok((
            self.camera_position.0 + (u - u0) * z / self.focal_px,
            self.camera_position.1 + (v - v0) * z / self.focal_px,
        ))
    }

    /// Projects a room point at vertical depth `depth_mm` below the camera.
    pub fn room_to_pixel(&self, x: f64, y: f64, depth_mm: f64) -> Result<(f64, f64)> {
        if depth_mm <= 0.0 {
            return Err(Error::InvalidDepth);
        }
        let z = depth_mm / 1000.0;
        let (u0, v0) = self.principal_point;
        Ok((
            u0 + (x - self.camera_position.0) * self.focal_px / z,
            v0 + (y - self.camera_position.1) * self.focal_px / z,
        ))
    }

    pub fn wall_length(&self, wall: Wall) -> f64 {
        match wall {
            Wall::S | Wall::N => self.width_m,
            Wall::E | Wall::W => self.depth_m,
        }
    }

    /// Room point at `offset` meters along `wall`, measured from the wall's
    /// lower coordinate (x for S/N, y for E/W).
    pub fn wall_point(&self, wall: Wall, offset: f64) -> (f64, f64) {
        match wall {
            Wall::S => (offset, 0.0),
            Wall::N => (offset, self.depth_m),
            Wall::W => (0.0, offset),
            Wall::E => (self.width_m, offset),
        }
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        p.0 > 0.0 && p.0 < self.width_m && p.1 > 0.0 && p.1 < self.depth_m
    }

    /// Discretizes the perimeter at spacing `<= step`. Samples sit at the
    /// centers of equal sub-intervals, so no sample lands on a corner.
    pub fn wall_samples(&self, step: f64) -> Result<WallGrid> {
        if !(step > 0.0) {
            return Err(Error::Precondition(format!("wall step must be > 0, got {step}")));
        }
        let mut samples = Vec::new();
        let mut ranges: [Range<usize>; 4] = Default::default();
        for wall in Wall::ALL {
            let len = self.wall_length(wall);
            let n = (len / step).ceil().max(1.0) as usize;
            let spacing = len / n as f64;
            let start = samples.len();
            for i in 0..n {
                // S and E run with increasing offset, N and W run back
                let j = match wall {
                    Wall::S | Wall::E => i,
                    Wall::N | Wall::W => n - 1 - i,
                };
                let offset = (j as f64 + 0.5) * spacing;
                samples.push(WallSample {
                    wall,
                    offset,
                    point: self.wall_point(wall, offset),
                });
            }
            ranges[wall.index()] = start..samples.len();
        }
        Ok(WallGrid {
            samples: samples.into(),
            ranges,
            step,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignSpec {
    pub id: String,
    pub wall: Wall,
    pub center_offset_m: f64,
    pub width_m: f64,
    /// Mounting height; the analysis is planar so this is informational.
    pub mount_height_m: Option<f64>,
}

impl SignSpec {
    pub fn interval(&self) -> (f64, f64) {
        let half = self.width_m / 2.0;
        (self.center_offset_m - half, self.center_offset_m + half)
    }

    pub fn center(&self, room: &RoomModel) -> (f64, f64) {
        room.wall_point(self.wall, self.center_offset_m)
    }

    pub fn contains(&self, sample: &WallSample) -> bool {
        let (lo, hi) = self.interval();
        sample.wall == self.wall && sample.offset >= lo && sample.offset <= hi
    }
}

pub fn validate_signs(signs: &[SignSpec], room: &RoomModel) -> Result<()> {
    for (i, s) in signs.iter().enumerate() {
        if !(s.width_m > 0.0) {
            return Err(Error::invariant("signs.width_m", format!("sign `{}` has width {}", s.id, s.width_m)));
        }
        let (lo, hi) = s.interval();
        if lo < 0.0 || hi > room.wall_length(s.wall) {
            return Err(Error::invariant(
                "signs.center_offset_m",
                format!("sign `{}` [{lo}, {hi}] leaves wall {}", s.id, s.wall),
            ));
        }
        if signs[..i].iter().any(|o| o.id == s.id) {
            return Err(Error::invariant("signs.id", format!("duplicate sign id `{}`", s.id)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WallSample {
    pub wall: Wall,
    pub offset: f64,
    pub point: (f64, f64),
}

/// The discretized perimeter. Samples of one wall are contiguous and ordered
/// along the perimeter.
#[derive(Debug, Clone, PartialEq)]
pub struct WallGrid {
    samples: Arc<[WallSample]>,
    ranges: [Range<usize>; 4],
    step: f64,
}

impl WallGrid {
    pub fn samples(&self) -> &[WallSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn wall_range(&self, wall: Wall) -> Range<usize> {
        self.ranges[wall.index()].clone()
    }

    /// Index of the sign covering each sample, if any.
    pub fn sign_membership(&self, signs: &[SignSpec]) -> Vec<Option<usize>> {
        self.samples
            .iter()
            .map(|s| signs.iter().position(|sign| sign.contains(s)))
            .collect()
    }

    pub(crate) fn same_grid(&self, other: &WallGrid) -> bool {
        Arc::ptr_eq(&self.samples, &other.samples) || self.samples == other.samples
    }
}
