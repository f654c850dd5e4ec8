use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    NotFound(PathBuf),

    #[error("unsupported image format for {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("corrupt image file {path}: {reason}")]
    CorruptFile { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("gap does not fit: {0}")]
    GapTooLarge(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("invalid gap spec: {0}")]
    InvalidSpec(String),

    #[error("no valid source pixel: the mask is entirely gap")]
    NoValidSource,

    #[error("degenerate mask: {0}")]
    DegenerateMask(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
