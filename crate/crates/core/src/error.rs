use std::path::PathBuf;

/// Errors produced by the coding, decoding and evaluation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid dimensions must be positive, got {height}x{width}")]
    EmptyGrid { height: usize, width: usize },

    #[error("center ({row}, {col}) lies outside the {height}x{width} grid")]
    CenterOutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("duplicate center ({row}, {col})")]
    DuplicateCenter { row: usize, col: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {left_h}x{left_w} vs {right_h}x{right_w}")]
    DimensionMismatch {
        left_h: usize,
        left_w: usize,
        right_h: usize,
        right_w: usize,
    },

    #[error("reversibility undefined: field has zero total mass")]
    ZeroMass,

    #[error("scene placement failed after {attempts} attempts: {constraint}")]
    Placement { attempts: usize, constraint: String },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("benchmark cell {cell}: {source}")]
    BenchCell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
