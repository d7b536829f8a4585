use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    Invariant { field: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid depth measurement (0 mm)")]
    InvalidDepth,

    #[error("correlation undefined: histogram has zero variance")]
    UndefinedCorrelation,

    #[error("histogram is not bimodal, cannot split head from shoulders")]
    NoHeadSplit,

    #[error("ellipse fit needs at least 5 pixels, got {0}")]
    TooFewPixels(usize),

    #[error("degenerate ellipse fit (collinear pixels)")]
    DegenerateFit,

    #[error("distance {0} m is outside the attention domain (r > 0)")]
    Domain(f64),

    #[error("track too short: {0} history entries")]
    TrackTooShort(usize),

    #[error("attention maps are defined on different wall grids")]
    GridMismatch,

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invariant(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invariant {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            message: message.into(),
        }
    }
}
