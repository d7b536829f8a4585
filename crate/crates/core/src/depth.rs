//! Depth frames and their on-disk form: 16-bit binary PGM files (big-endian,
//! maxval 65535, one millimeter per count) listed by a CSV manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::ImageReader;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Depth image in millimeters; 0 marks an invalid measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    pub width: usize,
    pub height: usize,
    pub depth_mm: Vec<u16>,
    pub frame_index: u64,
    pub timestamp_s: f64,
}

impl DepthFrame {
    pub fn new(width: usize, height: usize, depth_mm: Vec<u16>) -> Result<Self> {
        if depth_mm.len() != width * height {
            return Err(Error::Precondition(format!(
                "depth buffer has {} values for a {width}x{height} frame",
                depth_mm.len()
            )));
        }
        Ok(Self {
            width,
            height,
            depth_mm,
            frame_index: 0,
            timestamp_s: 0.0,
        })
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Self {
        Self {
            width,
            height,
            depth_mm: vec![value; width * height],
            frame_index: 0,
            timestamp_s: 0.0,
        }
    }

    pub fn with_index(mut self, frame_index: u64, timestamp_s: f64) -> Self {
        self.frame_index = frame_index;
        self.timestamp_s = timestamp_s;
        self
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> u16 {
        self.depth_mm[v * self.width + u]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Per-pixel depth of the empty scene.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundModel {
    pub frame: DepthFrame,
}

impl BackgroundModel {
    pub fn new(frame: DepthFrame) -> Self {
        Self { frame }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frame.dims()
    }
}

pub fn write_pgm16(frame: &DepthFrame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n65535\n", frame.width, frame.height)?;
        for d in &frame.depth_mm {
            w.write_all(&d.to_be_bytes())?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

pub fn read_pgm16(path: impl AsRef<Path>) -> Result<DepthFrame> {
    let path = path.as_ref();
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::data(path, e.to_string()))?;
    let img = match img {
        image::DynamicImage::ImageLuma16(buf) => buf,
        other => {
            return Err(Error::data(
                path,
                format!("expected a 16-bit grayscale image, got {:?}", other.color()),
            ))
        }
    };
    let (w, h) = img.dimensions();
    DepthFrame::new(w as usize, h as usize, img.into_raw())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub frame: u64,
    pub path: PathBuf,
    pub timestamp_s: f64,
}

/// Ordered list of frame files; paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const BACKGROUND_FILE: &str = "background.pgm";

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::data(path, e.to_string()))?;
        let mut entries: Vec<ManifestEntry> = Vec::new();
        for row in rdr.deserialize() {
            let e: ManifestEntry = row.map_err(|e| Error::data(path, e.to_string()))?;
            if let Some(prev) = entries.last() {
                if e.frame <= prev.frame || e.timestamp_s <= prev.timestamp_s {
                    return Err(Error::data(
                        path,
                        format!("frame {} is not strictly after frame {}", e.frame, prev.frame),
                    ));
                }
            }
            entries.push(e);
        }
        Ok(Self {
            dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            entries,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::data(path, e.to_string()))?;
        for e in &self.entries {
            w.serialize(e).map_err(|e| Error::data(path, e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn frame_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.dir.join(&entry.path)
    }

    pub fn read_frame(&self, entry: &ManifestEntry) -> Result<DepthFrame> {
        Ok(read_pgm16(self.frame_path(entry))?.with_index(entry.frame, entry.timestamp_s))
    }
}
