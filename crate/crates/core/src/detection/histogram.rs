//! Depth histograms of blobs: person filtering by correlation against stored
//! reference histograms and the head/shoulder split at the valley between the
//! two dominant peaks.

use std::fmt::Write as _;
use std::path::Path;

use crate::depth::DepthFrame;
use crate::detection::blob::BodyBlob;
use crate::error::{Error, Result};

/// Uniform histogram over `[lo, hi]` millimeters.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthHistogram {
    pub lo_mm: f64,
    pub hi_mm: f64,
    pub counts: Vec<u64>,
}

impl DepthHistogram {
    pub fn new(lo_mm: f64, hi_mm: f64, bins: usize) -> Self {
        Self {
            lo_mm,
            hi_mm,
            counts: vec![0; bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi_mm - self.lo_mm) / self.bins() as f64
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        (0..=self.bins())
            .map(|i| self.lo_mm + i as f64 * self.bin_width())
            .collect()
    }

    pub fn lower_edge(&self, bin: usize) -> f64 {
        self.lo_mm + bin as f64 * self.bin_width()
    }

    /// Bin of a depth; out-of-range depths clamp to the edge bins.
    pub fn bin_of(&self, depth_mm: f64) -> usize {
        let b = ((depth_mm - self.lo_mm) / self.bin_width()).floor();
        b.clamp(0.0, (self.bins() - 1) as f64) as usize
    }

    pub fn add(&mut self, depth_mm: f64) {
        let b = self.bin_of(depth_mm);
        self.counts[b] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Local maxima with a non-zero count. A plateau reports its first bin.
    pub fn local_maxima(&self) -> Vec<usize> {
        let c = &self.counts;
        (0..c.len())
            .filter(|&i| {
                c[i] > 0 && (i == 0 || c[i] > c[i - 1]) && (i + 1 == c.len() || c[i] >= c[i + 1])
            })
            .collect()
    }
}

pub fn blob_histogram(frame: &DepthFrame, blob: &BodyBlob, bins: usize, range_mm: (f64, f64)) -> Result<DepthHistogram> {
    if bins < 2 {
        return Err(Error::Precondition(format!("histogram needs at least 2 bins, got {bins}")));
    }
    let mut h = DepthHistogram::new(range_mm.0, range_mm.1, bins);
    for &(u, v) in &blob.pixels {
        h.add(frame.at(u, v) as f64);
    }
    Ok(h)
}

/// Pearson correlation of the two count vectors.
pub fn histogram_correlation(a: &DepthHistogram, b: &DepthHistogram) -> Result<f64> {
    if a.bins() != b.bins() {
        return Err(Error::Precondition(format!(
            "histograms have {} and {} bins",
            a.bins(),
            b.bins()
        )));
    }
    let n = a.bins() as f64;
    let mean_a = a.counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let mean_b = b.counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.counts.iter().zip(&b.counts) {
        let da = x as f64 - mean_a;
        let db = y as f64 - mean_b;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Best correlation against any reference; undefined correlations count as
/// no match.
pub fn best_reference_correlation(hist: &DepthHistogram, refs: &[DepthHistogram]) -> Option<f64> {
    refs.iter()
        .filter_map(|r| histogram_correlation(hist, r).ok())
        .fold(None, |best, c| Some(best.map_or(c, |b: f64| b.max(c))))
}

/// Keeps the blobs whose histogram correlates with at least one reference at
/// `threshold` or above.
pub fn filter_person_blobs(
    blobs: &[BodyBlob],
    histograms: &[DepthHistogram],
    refs: &[DepthHistogram],
    threshold: f64,
) -> Result<Vec<BodyBlob>> {
    Ok(person_blob_indices(histograms, refs, threshold)?
        .into_iter()
        .map(|i| blobs[i].clone())
        .collect())
}

pub(crate) fn person_blob_indices(histograms: &[DepthHistogram], refs: &[DepthHistogram], threshold: f64) -> Result<Vec<usize>> {
    if refs.is_empty() {
        return Err(Error::Precondition("no reference histograms".into()));
    }
    Ok(histograms
        .iter()
        .enumerate()
        .filter(|(_, h)| best_reference_correlation(h, refs).is_some_and(|c| c >= threshold))
        .map(|(i, _)| i)
        .collect())
}

/// Depth threshold separating head from shoulders: the lower edge of the
/// least-populated bin strictly between the two highest local maxima.
pub fn head_split_depth(hist: &DepthHistogram) -> Result<f64> {
    let mut peaks = hist.local_maxima();
    // highest first, ties to the shallower bin
    peaks.sort_by(|&a, &b| hist.counts[b].cmp(&hist.counts[a]).then(a.cmp(&b)));
    if peaks.len() < 2 {
        return Err(Error::NoHeadSplit);
    }
    let (p, q) = (peaks[0].min(peaks[1]), peaks[0].max(peaks[1]));
    if q - p < 2 {
        return Err(Error::NoHeadSplit);
    }
    let valley = (p + 1..q)
        .min_by(|&a, &b| hist.counts[a].cmp(&hist.counts[b]).then(a.cmp(&b)))
        .ok_or(Error::NoHeadSplit)?;
    Ok(hist.lower_edge(valley))
}

/// Blob pixels closer to the camera than the head/shoulder valley.
pub fn split_head_mask(frame: &DepthFrame, blob: &BodyBlob, hist: &DepthHistogram) -> Result<Vec<(usize, usize)>> {
    let cut = head_split_depth(hist)?;
    Ok(blob
        .pixels
        .iter()
        .copied()
        .filter(|&(u, v)| (frame.at(u, v) as f64) < cut)
        .collect())
}

/// The stored head exemplars, all on one bin layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceHistograms {
    pub hists: Vec<DepthHistogram>,
}

impl ReferenceHistograms {
    /// Plain-text table: an `edges` row with the bin edges in millimeters,
    /// then one `ref` row of counts per reference.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# depth histograms of reference heads; edges in mm\n");
        if let Some(first) = self.hists.first() {
            out.push_str("edges");
            for e in first.bin_edges() {
                let _ = write!(out, " {e}");
            }
            out.push('\n');
        }
        for h in &self.hists {
            out.push_str("ref");
            for c in &h.counts {
                let _ = write!(out, " {c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::data(path, msg);
        let mut edges: Option<Vec<f64>> = None;
        let mut hists = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            match fields.next() {
                Some("edges") => {
                    let e: Vec<f64> = fields
                        .map(|f| f.parse::<f64>().map_err(|e| bad(format!("line {}: {e}", n + 1))))
                        .collect::<Result<_>>()?;
                    if e.len() < 3 {
                        return Err(bad(format!("line {}: need at least 3 edges", n + 1)));
                    }
                    edges = Some(e);
                }
                Some("ref") => {
                    let e = edges.as_ref().ok_or_else(|| bad("`ref` row before `edges` row".into()))?;
                    let counts: Vec<u64> = fields
                        .map(|f| f.parse::<u64>().map_err(|e| bad(format!("line {}: {e}", n + 1))))
                        .collect::<Result<_>>()?;
                    if counts.len() + 1 != e.len() {
                        return Err(bad(format!(
                            "line {}: {} counts for {} edges",
                            n + 1,
                            counts.len(),
                            e.len()
                        )));
                    }
                    hists.push(DepthHistogram {
                        lo_mm: e[0],
                        hi_mm: e[e.len() - 1],
                        counts,
                    });
                }
                Some(other) => return Err(bad(format!("line {}: unknown row `{other}`", n + 1))),
                None => {}
            }
        }
        if hists.is_empty() {
            return Err(bad("no reference histograms".into()));
        }
        Ok(Self { hists })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
