use std::f64::consts::PI;

use crate::angles::wrap_pi;
use crate::error::{Error, Result};

/// Moment-equivalent ellipse of a pixel set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseFit {
    pub center: (f64, f64),
    /// Full axis lengths of the ellipse with the same second moments.
    pub major_px: f64,
    pub minor_px: f64,
    /// Orientation of the major axis in `[0, π)`; the direction is ambiguous.
    pub axis_angle: f64,
}

pub fn fit_ellipse(pixels: &[(usize, usize)]) -> Result<EllipseFit> {
    if pixels.len() < 5 {
        return Err(Error::TooFewPixels(pixels.len()));
    }
    let n = pixels.len() as f64;
    let (su, sv) = pixels
        .iter()
        .fold((0.0, 0.0), |(a, b), &(u, v)| (a + u as f64, b + v as f64));
    let (cu, cv) = (su / n, sv / n);
    let (mut mu20, mut mu02, mut mu11) = (0.0, 0.0, 0.0);
    for &(u, v) in pixels {
        let du = u as f64 - cu;
        let dv = v as f64 - cv;
        mu20 += du * du;
        mu02 += dv * dv;
        mu11 += du * dv;
    }
    mu20 /= n;
    mu02 /= n;
    mu11 /= n;

    let mean = (mu20 + mu02) / 2.0;
    let spread = (((mu20 - mu02) / 2.0).powi(2) + mu11 * mu11).sqrt();
    let (l1, l2) = (mean + spread, mean - spread);
    if l2 <= 1e-9 * l1.max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateFit);
    }
    let axis_angle = wrap_pi(0.5 * (2.0 * mu11).atan2(mu20 - mu02));
    debug_assert!((0.0..PI).contains(&axis_angle));
    Ok(EllipseFit {
        center: (cu, cv),
        major_px: 4.0 * l1.sqrt(),
        minor_px: 4.0 * l2.sqrt(),
        axis_angle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angles::circular_distance;
    use proptest::prelude::*;

    /// Pixels whose centers fall inside a `len x wid` rectangle centered at
    /// (cx, cy) and rotated by `angle`.
    fn rect(cx: f64, cy: f64, len: f64, wid: f64, angle: f64) -> Vec<(usize, usize)> {
        let (s, c) = angle.sin_cos();
        let mut px = Vec::new();
        for v in 0..200 {
            for u in 0..200 {
                let (dx, dy) = (u as f64 - cx, v as f64 - cy);
                let a = dx * c + dy * s;
                let b = -dx * s + dy * c;
                if a.abs() <= len / 2.0 && b.abs() <= wid / 2.0 {
                    px.push((u, v));
                }
            }
        }
        px
    }

    #[test]
    fn axis_aligned_rectangle() {
        let mut px = Vec::new();
        for v in 0..10 {
            for u in 0..20 {
                px.push((u + 30, v + 40));
            }
        }
        let e = fit_ellipse(&px).unwrap();
        assert!(e.axis_angle.abs() < 1e-12);
        assert!((e.major_px / e.minor_px - 2.0).abs() < 0.1);
        assert_eq!(e.center, (39.5, 44.5));
    }

    #[test]
    fn rotated_rectangle() {
        let e = fit_ellipse(&rect(100.0, 100.0, 60.0, 30.0, PI / 4.0)).unwrap();
        assert!((e.axis_angle - PI / 4.0).abs() < 0.02, "{}", e.axis_angle);
    }

    #[test]
    fn disk_does_not_error() {
        let mut px = Vec::new();
        for v in 0..41 {
            for u in 0..41 {
                let (du, dv) = (u as f64 - 20.0, v as f64 - 20.0);
                if du * du + dv * dv <= 400.0 {
                    px.push((u, v));
                }
            }
        }
        let e = fit_ellipse(&px).unwrap();
        assert!((e.major_px / e.minor_px - 1.0).abs() < 0.01);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_ellipse(&[(0, 0); 4]), Err(Error::TooFewPixels(4))));
        let line: Vec<_> = (0..30).map(|i| (i, i)).collect();
        assert!(matches!(fit_ellipse(&line), Err(Error::DegenerateFit)));
        let row: Vec<_> = (0..30).map(|i| (i, 7)).collect();
        assert!(matches!(fit_ellipse(&row), Err(Error::DegenerateFit)));
    }

    proptest! {
        #[test]
        fn rotation_equivariance(alpha in 0.0..PI, base in 0.0..PI) {
            let a = fit_ellipse(&rect(100.0, 100.0, 70.0, 30.0, base)).unwrap();
            let b = fit_ellipse(&rect(100.0, 100.0, 70.0, 30.0, base + alpha)).unwrap();
            let expected = wrap_pi(a.axis_angle + alpha);
            // compare on the doubled circle since axes are only defined mod π
            let err = circular_distance(2.0 * b.axis_angle, 2.0 * expected) / 2.0;
            prop_assert!(err < 0.02, "err {}", err);
        }

        #[test]
        fn translation_moves_center_exactly(du in 0usize..50, dv in 0usize..50) {
            let px = rect(60.0, 60.0, 40.0, 16.0, 0.7);
            let a = fit_ellipse(&px).unwrap();
            let moved: Vec<_> = px.iter().map(|&(u, v)| (u + du, v + dv)).collect();
            let b = fit_ellipse(&moved).unwrap();
            prop_assert!((b.center.0 - a.center.0 - du as f64).abs() < 1e-9);
            prop_assert!((b.center.1 - a.center.1 - dv as f64).abs() < 1e-9);
            prop_assert!((b.axis_angle - a.axis_angle).abs() < 1e-9);
        }
    }
}
