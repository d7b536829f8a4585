use std::collections::VecDeque;

use crate::depth::{BackgroundModel, DepthFrame};
use crate::error::{Error, Result};

/// Binary foreground mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> bool {
        self.bits[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, on: bool) {
        self.bits[v * self.width + u] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

/// Pixels of the frame closer to the camera than the background by more
/// than `delta_mm`. Invalid (zero) depths on either side never qualify.
pub fn subtract_background(frame: &DepthFrame, bg: &BackgroundModel, delta_mm: f64) -> Result<Mask> {
    if frame.dims() != bg.dims() {
        return Err(Error::DimensionMismatch {
            expected: bg.dims(),
            actual: frame.dims(),
        });
    }
    if !(delta_mm > 0.0) {
        return Err(Error::Precondition(format!("background delta must be > 0, got {delta_mm}")));
    }
    let bits = frame
        .depth_mm
        .iter()
        .zip(&bg.frame.depth_mm)
        .map(|(&f, &b)| f > 0 && b > 0 && (b as f64 - f as f64) > delta_mm)
        .collect();
    Ok(Mask {
        width: frame.width,
        height: frame.height,
        bits,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundingBox {
    pub u_min: usize,
    pub v_min: usize,
    pub u_max: usize,
    pub v_max: usize,
}

/// A 4-connected foreground component.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyBlob {
    pub pixels: Vec<(usize, usize)>,
    pub bbox: BoundingBox,
    /// The blob touches the image edge.
    pub partial: bool,
}

impl BodyBlob {
    pub fn area_px(&self) -> usize {
        self.pixels.len()
    }
}

/// Connected components (4-connectivity) with at least `min_area` pixels,
/// largest first. Equal areas keep raster order of their first pixel.
pub fn extract_blobs(mask: &Mask, min_area: usize) -> Vec<BodyBlob> {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut blobs = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        let mut bbox = BoundingBox {
            u_min: usize::MAX,
            v_min: usize::MAX,
            u_max: 0,
            v_max: 0,
        };
        while let Some(i) = queue.pop_front() {
            let (u, v) = (i % w, i / w);
            pixels.push((u, v));
            bbox.u_min = bbox.u_min.min(u);
            bbox.u_max = bbox.u_max.max(u);
            bbox.v_min = bbox.v_min.min(v);
            bbox.v_max = bbox.v_max.max(v);
            let mut visit = |j: usize| {
                if mask.bits[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if u > 0 {
                visit(i - 1);
            }
            if u + 1 < w {
                visit(i + 1);
            }
            if v > 0 {
                visit(i - w);
            }
            if v + 1 < h {
                visit(i + w);
            }
        }
        if pixels.len() >= min_area {
            let partial = bbox.u_min == 0 || bbox.v_min == 0 || bbox.u_max + 1 == w || bbox.v_max + 1 == h;
            blobs.push(BodyBlob { pixels, bbox, partial });
        }
    }
    blobs.sort_by_key(|b| std::cmp::Reverse(b.area_px()));
    blobs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_from(rows: &[&str]) -> Mask {
        let h = rows.len();
        let w = rows[0].len();
        let mut m = Mask::empty(w, h);
        for (v, r) in rows.iter().enumerate() {
            for (u, c) in r.chars().enumerate() {
                m.set(u, v, c == '#');
            }
        }
        m
    }

    #[test]
    fn identical_frames_give_empty_mask() {
        let bg = BackgroundModel::new(DepthFrame::filled(8, 6, 2800));
        let m = subtract_background(&bg.frame, &bg, 300.0).unwrap();
        assert_eq!(m.count(), 0);
    }

    #[test]
    fn single_closer_pixel() {
        let bg = BackgroundModel::new(DepthFrame::filled(4, 4, 2800));
        let mut f = bg.frame.clone();
        f.depth_mm[5] = 1200;
        f.depth_mm[6] = 0;
        let m = subtract_background(&f, &bg, 300.0).unwrap();
        assert!(m.bits[5]);
        assert!(!m.bits[6]);
        assert_eq!(m.count(), 1);
    }

    #[test]
    fn dimension_mismatch() {
        let bg = BackgroundModel::new(DepthFrame::filled(4, 4, 2800));
        let f = DepthFrame::filled(5, 4, 2800);
        assert!(matches!(
            subtract_background(&f, &bg, 300.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn two_squares_and_a_speck() {
        let mut m = Mask::empty(40, 20);
        for v in 2..12 {
            for u in 2..12 {
                m.set(u, v, true);
                m.set(u + 20, v, true);
            }
        }
        m.set(35, 17, true);
        let blobs = extract_blobs(&m, 50);
        assert_eq!(blobs.len(), 2);
        assert!(blobs.iter().all(|b| b.area_px() == 100 && !b.partial));

        let mut speck = Mask::empty(20, 20);
        for u in 5..15 {
            speck.set(u, 5, true);
        }
        assert!(extract_blobs(&speck, 50).is_empty());
    }

    #[test]
    fn diagonal_neighbours_are_separate() {
        let m = mask_from(&["#...", ".#..", "..#.", "...#"]);
        let blobs = extract_blobs(&m, 1);
        assert_eq!(blobs.len(), 4);
        assert!(blobs[0].partial);
    }

    // Oracle: label components with a recursive flood fill and compare sizes.
    fn flood_sizes(m: &Mask) -> Vec<usize> {
        fn fill(m: &Mask, lab: &mut [bool], u: i64, v: i64) -> usize {
            if u < 0 || v < 0 || u >= m.width as i64 || v >= m.height as i64 {
                return 0;
            }
            let i = v as usize * m.width + u as usize;
            if !m.bits[i] || lab[i] {
                return 0;
            }
            lab[i] = true;
            1 + fill(m, lab, u + 1, v) + fill(m, lab, u - 1, v) + fill(m, lab, u, v + 1) + fill(m, lab, u, v - 1)
        }
        let mut lab = vec![false; m.bits.len()];
        let mut sizes = Vec::new();
        for v in 0..m.height {
            for u in 0..m.width {
                let s = fill(m, &mut lab, u as i64, v as i64);
                if s > 0 {
                    sizes.push(s);
                }
            }
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    proptest! {
        #[test]
        fn components_match_flood_fill(bits in proptest::collection::vec(any::<bool>(), 12 * 10)) {
            let m = Mask { width: 12, height: 10, bits };
            let sizes: Vec<usize> = extract_blobs(&m, 1).iter().map(BodyBlob::area_px).collect();
            prop_assert_eq!(sizes, flood_sizes(&m));
        }

        #[test]
        fn mask_shrinks_with_delta(depths in proptest::collection::vec(0u16..3000, 64), d1 in 1.0..1000.0f64, extra in 0.0..1000.0f64) {
            let bg = BackgroundModel::new(DepthFrame::filled(8, 8, 2800));
            let f = DepthFrame::new(8, 8, depths).unwrap();
            let loose = subtract_background(&f, &bg, d1).unwrap();
            let tight = subtract_background(&f, &bg, d1 + extra + 1e-9).unwrap();
            for (t, l) in tight.bits.iter().zip(&loose.bits) {
                prop_assert!(!*t || *l);
            }
        }
    }
}
