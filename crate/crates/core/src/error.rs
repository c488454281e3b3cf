use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),

    #[error("signed distance undefined: mask has no background voxel")]
    NoBackground,

    #[error("mask has no foreground voxel")]
    EmptyMask,

    #[error("field has no positive maximum")]
    NonPositiveField,

    #[error("slice index {index} out of range (nz = {nz})")]
    SliceOutOfRange { index: usize, nz: usize },

    #[error("point ({x}, {y}) lies outside the field")]
    OutOfBounds { x: f64, y: f64 },

    #[error("field is {nx}x{ny}, at least 3x3 required")]
    FieldTooSmall { nx: usize, ny: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("polyline stack is empty")]
    EmptyStack,

    #[error("mesh has no triangles")]
    EmptyMesh,

    #[error("{path}: unsupported {field}: {value}")]
    Unsupported { path: PathBuf, field: String, value: String },

    #[error("{path}: malformed header: {reason}")]
    Header { path: PathBuf, reason: String },

    #[error("{path}: data size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { path: PathBuf, expected: usize, actual: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
