//! Planar angle helpers. Every angle in the crate is in radians, measured in
//! room coordinates with `atan2(dy, dx)`.

use std::f64::consts::{PI, TAU};

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_2pi(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Wraps an angle into `[0, π)`.
pub fn wrap_pi(a: f64) -> f64 {
    let w = a.rem_euclid(PI);
    if w >= PI {
        0.0
    } else {
        w
    }
}

/// Signed difference `to - from` wrapped into `(-π, π]`.
pub fn signed_diff(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Distance on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    signed_diff(a, b).abs()
}

/// Direction of the vector from `from` to `to`, in `[0, 2π)`.
pub fn bearing(from: (f64, f64), to: (f64, f64)) -> f64 {
    wrap_2pi((to.1 - from.1).atan2(to.0 - from.0))
}
