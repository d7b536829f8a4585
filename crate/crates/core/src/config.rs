//! Configuration file loading.
//!
//! The file is TOML with `[room]`, `[camera]`, `[[signs]]` and `[pipeline]`
//! sections. Lengths are meters, depths millimeters and angles degrees; angles
//! are converted to radians on load. Every key is optional and falls back to
//! the defaults below.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::room::{validate_signs, RoomModel, SignSpec, Wall};

/// Tunables of the detection, tracking and attention stages.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub bg_delta_mm: f64,
    pub min_blob_px: usize,
    pub hist_bins: usize,
    pub hist_range_mm: (f64, f64),
    pub corr_threshold: f64,
    pub gate_radius_m: f64,
    pub cone_half_angle_rad: f64,
    /// Gain of the head-vs-trajectory angle factor, per radian.
    pub c2: f64,
    /// Speed regularizer, m/s.
    pub kappa: f64,
    pub wall_step_m: f64,
    pub fps: f64,
    pub max_turn_rate_rad: f64,
    /// Lower clamp on the viewer-to-wall distance.
    pub min_distance_m: f64,
    pub confirm_hits: usize,
    pub max_misses: usize,
    /// Per-frame displacement below which the trajectory direction is held.
    pub standstill_m: f64,
    /// Inward border-distance gain a border-born track needs before confirmation.
    pub min_inward_px: f64,
    pub smooth_positions: bool,
    pub reference_histograms: Option<PathBuf>,
}

impl PipelineConfig {
    /// Defaults for a given room; the blob-size floor scales with the camera.
    pub fn for_room(room: &RoomModel) -> Self {
        Self {
            bg_delta_mm: 300.0,
            min_blob_px: default_min_blob_px(room),
            hist_bins: 36,
            hist_range_mm: (800.0, 2600.0),
            corr_threshold: 0.2,
            gate_radius_m: 0.5,
            cone_half_angle_rad: 30f64.to_radians(),
            c2: 0.5,
            kappa: 0.1,
            wall_step_m: 0.05,
            fps: 4.0,
            max_turn_rate_rad: 45f64.to_radians(),
            min_distance_m: 0.3,
            confirm_hits: 3,
            max_misses: 3,
            standstill_m: 0.01,
            min_inward_px: 4.0,
            smooth_positions: false,
            reference_histograms: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invariant(field, format!("must be > 0, got {v}")))
            }
        }
        positive("bg_delta_mm", self.bg_delta_mm)?;
        if self.min_blob_px == 0 {
            return Err(Error::invariant("min_blob_px", "must be > 0"));
        }
        if self.hist_bins < 2 {
            return Err(Error::invariant("hist_bins", "need at least 2 bins"));
        }
        if !(self.hist_range_mm.1 > self.hist_range_mm.0) {
            return Err(Error::invariant("hist_range_mm", "upper bound must exceed lower bound"));
        }
        if !(self.corr_threshold > -1.0 && self.corr_threshold < 1.0) {
            return Err(Error::invariant(
                "corr_threshold",
                format!("must lie in (-1, 1), got {}", self.corr_threshold),
            ));
        }
        positive("gate_radius_m", self.gate_radius_m)?;
        if !(self.cone_half_angle_rad > 0.0 && self.cone_half_angle_rad <= FRAC_PI_2) {
            return Err(Error::invariant(
                "cone_half_angle",
                format!("must lie in (0, 90] degrees, got {}", self.cone_half_angle_rad.to_degrees()),
            ));
        }
        // negative gains are allowed as long as the angle factor stays positive on [0, π]
        if !(self.c2.is_finite() && 1.0 + self.c2 * PI > 0.0) {
            return Err(Error::invariant("c2", format!("must exceed -1/π, got {}", self.c2)));
        }
        positive("kappa", self.kappa)?;
        positive("wall_step_m", self.wall_step_m)?;
        positive("fps", self.fps)?;
        positive("max_turn_rate", self.max_turn_rate_rad)?;
        positive("min_distance_m", self.min_distance_m)?;
        if self.confirm_hits == 0 {
            return Err(Error::invariant("confirm_hits", "must be > 0"));
        }
        positive("standstill_m", self.standstill_m)?;
        if !(self.min_inward_px >= 0.0) {
            return Err(Error::invariant("min_inward_px", "must be >= 0"));
        }
        Ok(())
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::for_room(&RoomModel::default())
    }
}

/// Blob floor approximating a 0.25 m head-and-shoulder footprint at floor level.
pub fn default_min_blob_px(room: &RoomModel) -> usize {
    let side = 0.25 * room.focal_px / room.camera_height_m;
    (side * side).round().max(1.0) as usize
}

/// Everything a configuration file describes.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub room: RoomModel,
    pub signs: Vec<SignSpec>,
    pub pipeline: PipelineConfig,
}

impl Default for Config {
    fn default() -> Self {
        let room = RoomModel::default();
        let pipeline = PipelineConfig::for_room(&room);
        Self {
            signs: default_signs(&room),
            room,
            pipeline,
        }
    }
}

/// One A4-width poster centered on each wall.
pub fn default_signs(room: &RoomModel) -> Vec<SignSpec> {
    [("orange", Wall::N), ("green", Wall::E), ("red", Wall::W), ("dark_green", Wall::S)]
        .into_iter()
        .map(|(id, wall)| SignSpec {
            id: id.to_string(),
            wall,
            center_offset_m: room.wall_length(wall) / 2.0,
            width_m: 0.21,
            mount_height_m: Some(1.5),
        })
        .collect()
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSection {
    pub width_m: Option<f64>,
    pub depth_m: Option<f64>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSection {
    pub position_m: Option<[f64; 2]>,
    pub height_m: Option<f64>,
    pub focal_px: Option<f64>,
    pub principal_point_px: Option<[f64; 2]>,
    pub image_size_px: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignEntry {
    pub id: String,
    pub wall: Wall,
    pub center_offset_m: f64,
    pub width_m: f64,
    pub mount_height_m: Option<f64>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub bg_delta_mm: Option<f64>,
    pub min_blob_px: Option<usize>,
    pub hist_bins: Option<usize>,
    pub hist_range_mm: Option<[f64; 2]>,
    pub corr_threshold: Option<f64>,
    pub gate_radius_m: Option<f64>,
    pub cone_half_angle_deg: Option<f64>,
    pub c2: Option<f64>,
    pub kappa: Option<f64>,
    pub wall_step_m: Option<f64>,
    pub fps: Option<f64>,
    pub max_turn_rate_deg: Option<f64>,
    pub min_distance_m: Option<f64>,
    pub confirm_hits: Option<usize>,
    pub max_misses: Option<usize>,
    pub standstill_m: Option<f64>,
    pub min_inward_px: Option<f64>,
    pub smooth_positions: Option<bool>,
    pub reference_histograms: Option<PathBuf>,
}

/// The on-disk layout, shared by config and scenario files.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
pub struct ConfigFile {
    #[serde(default)]
    pub room: RoomSection,
    #[serde(default)]
    pub camera: CameraSection,
    pub signs: Option<Vec<SignEntry>>,
    #[serde(default)]
    pub pipeline: PipelineSection,
}

impl ConfigFile {
    /// Applies defaults and validates. Relative paths resolve against `base_dir`.
    pub fn resolve(self, base_dir: Option<&Path>) -> Result<Config> {
        let d = RoomModel::default();
        let image_size = self
            .camera
            .image_size_px
            .map(|[w, h]| (w, h))
            .unwrap_or(d.image_size);
        let room = RoomModel {
            width_m: self.room.width_m.unwrap_or(d.width_m),
            depth_m: self.room.depth_m.unwrap_or(d.depth_m),
            camera_position: self
                .camera
                .position_m
                .map(|[x, y]| (x, y))
                .unwrap_or_else(|| {
                    (
                        self.room.width_m.unwrap_or(d.width_m) / 2.0,
                        self.room.depth_m.unwrap_or(d.depth_m) / 2.0,
                    )
                }),
            camera_height_m: self.camera.height_m.unwrap_or(d.camera_height_m),
            focal_px: self.camera.focal_px.unwrap_or(d.focal_px),
            principal_point: self
                .camera
                .principal_point_px
                .map(|[u, v]| (u, v))
                .unwrap_or(((image_size.0 as f64 - 1.0) / 2.0, (image_size.1 as f64 - 1.0) / 2.0)),
            image_size,
        };
        room.validate()?;

        let signs = match self.signs {
            Some(entries) => entries
                .into_iter()
                .map(|e| SignSpec {
                    id: e.id,
                    wall: e.wall,
                    center_offset_m: e.center_offset_m,
                    width_m: e.width_m,
                    mount_height_m: e.mount_height_m,
                })
                .collect(),
            None => default_signs(&room),
        };
        validate_signs(&signs, &room)?;

        let p = self.pipeline;
        let dp = PipelineConfig::for_room(&room);
        let pipeline = PipelineConfig {
            bg_delta_mm: p.bg_delta_mm.unwrap_or(dp.bg_delta_mm),
            min_blob_px: p.min_blob_px.unwrap_or(dp.min_blob_px),
            hist_bins: p.hist_bins.unwrap_or(dp.hist_bins),
            hist_range_mm: p.hist_range_mm.map(|[a, b]| (a, b)).unwrap_or(dp.hist_range_mm),
            corr_threshold: p.corr_threshold.unwrap_or(dp.corr_threshold),
            gate_radius_m: p.gate_radius_m.unwrap_or(dp.gate_radius_m),
            cone_half_angle_rad: p
                .cone_half_angle_deg
                .map(f64::to_radians)
                .unwrap_or(dp.cone_half_angle_rad),
            c2: p.c2.unwrap_or(dp.c2),
            kappa: p.kappa.unwrap_or(dp.kappa),
            wall_step_m: p.wall_step_m.unwrap_or(dp.wall_step_m),
            fps: p.fps.unwrap_or(dp.fps),
            max_turn_rate_rad: p
                .max_turn_rate_deg
                .map(f64::to_radians)
                .unwrap_or(dp.max_turn_rate_rad),
            min_distance_m: p.min_distance_m.unwrap_or(dp.min_distance_m),
            confirm_hits: p.confirm_hits.unwrap_or(dp.confirm_hits),
            max_misses: p.max_misses.unwrap_or(dp.max_misses),
            standstill_m: p.standstill_m.unwrap_or(dp.standstill_m),
            min_inward_px: p.min_inward_px.unwrap_or(dp.min_inward_px),
            smooth_positions: p.smooth_positions.unwrap_or(dp.smooth_positions),
            reference_histograms: p.reference_histograms.map(|r| match base_dir {
                Some(base) if r.is_relative() => base.join(r),
                _ => r,
            }),
        };
        pipeline.validate()?;

        Ok(Config {
            room,
            signs,
            pipeline,
        })
    }

    pub fn from_config(cfg: &Config) -> Self {
        let p = &cfg.pipeline;
        ConfigFile {
            room: RoomSection {
                width_m: Some(cfg.room.width_m),
                depth_m: Some(cfg.room.depth_m),
            },
            camera: CameraSection {
                position_m: Some([cfg.room.camera_position.0, cfg.room.camera_position.1]),
                height_m: Some(cfg.room.camera_height_m),
                focal_px: Some(cfg.room.focal_px),
                principal_point_px: Some([cfg.room.principal_point.0, cfg.room.principal_point.1]),
                image_size_px: Some([cfg.room.image_size.0, cfg.room.image_size.1]),
            },
            signs: Some(
                cfg.signs
                    .iter()
                    .map(|s| SignEntry {
                        id: s.id.clone(),
                        wall: s.wall,
                        center_offset_m: s.center_offset_m,
                        width_m: s.width_m,
                        mount_height_m: s.mount_height_m,
                    })
                    .collect(),
            ),
            pipeline: PipelineSection {
                bg_delta_mm: Some(p.bg_delta_mm),
                min_blob_px: Some(p.min_blob_px),
                hist_bins: Some(p.hist_bins),
                hist_range_mm: Some([p.hist_range_mm.0, p.hist_range_mm.1]),
                corr_threshold: Some(p.corr_threshold),
                gate_radius_m: Some(p.gate_radius_m),
                cone_half_angle_deg: Some(p.cone_half_angle_rad.to_degrees()),
                c2: Some(p.c2),
                kappa: Some(p.kappa),
                wall_step_m: Some(p.wall_step_m),
                fps: Some(p.fps),
                max_turn_rate_deg: Some(p.max_turn_rate_rad.to_degrees()),
                min_distance_m: Some(p.min_distance_m),
                confirm_hits: Some(p.confirm_hits),
                max_misses: Some(p.max_misses),
                standstill_m: Some(p.standstill_m),
                min_inward_px: Some(p.min_inward_px),
                smooth_positions: Some(p.smooth_positions),
                reference_histograms: p.reference_histograms.clone(),
            },
        }
    }
}

pub fn parse_config(text: &str, path: &Path) -> Result<Config> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    file.resolve(path.parent())
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

pub fn write_config(cfg: &Config, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = toml::to_string_pretty(&ConfigFile::from_config(cfg)).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"
[room]
width_m = 5.0
depth_m = 5.0

[camera]
position_m = [2.5, 2.5]
height_m = 2.8
focal_px = 160.0
image_size_px = [320, 240]

[[signs]]
id = "orange"
wall = "N"
center_offset_m = 2.5
width_m = 0.21

[pipeline]
cone_half_angle_deg = 30.0
fps = 4.0
"#;

    #[test]
    fn valid_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("room.toml");
        std::fs::write(&path, VALID).unwrap();
        let cfg = load_config(&path).unwrap();
        assert_eq!(cfg.room.width_m, 5.0);
        assert_eq!(cfg.room.principal_point, (159.5, 119.5));
        assert_eq!(cfg.signs.len(), 1);
        assert_eq!(cfg.signs[0].wall, Wall::N);
        assert!((cfg.pipeline.cone_half_angle_rad - 30f64.to_radians()).abs() < 1e-15);
        assert_eq!(cfg.pipeline.corr_threshold, 0.2);
    }

    #[test]
    fn negative_width_names_field() {
        let text = VALID.replace("width_m = 5.0", "width_m = -1.0");
        match parse_config(&text, Path::new("x.toml")) {
            Err(Error::Invariant { field, .. }) => assert_eq!(field, "width_m"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn garbage_is_a_parse_error() {
        assert!(matches!(
            parse_config("[room\nwidth", Path::new("x.toml")),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_config("[pipeline]\nbogus = 1\n", Path::new("x.toml")),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn written_config_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        let cfg = Config::default();
        write_config(&cfg, &path).unwrap();
        let back = load_config(&path).unwrap();
        assert_eq!(back.room, cfg.room);
        assert_eq!(back.signs, cfg.signs);
        assert!((back.pipeline.cone_half_angle_rad - cfg.pipeline.cone_half_angle_rad).abs() < 1e-12);
    }

    #[test]
    fn cone_limits() {
        let mut p = PipelineConfig {
            cone_half_angle_rad: 91f64.to_radians(),
            ..PipelineConfig::default()
        };
        assert!(p.validate().is_err());
        p.cone_half_angle_rad = FRAC_PI_2;
        assert!(p.validate().is_ok());
        p.c2 = -0.2;
        assert!(p.validate().is_ok());
        p.c2 = -0.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn default_blob_floor() {
        // (0.25 * 160 / 2.8)^2 = 204.08
        assert_eq!(default_min_blob_px(&RoomModel::default()), 204);
    }
}
