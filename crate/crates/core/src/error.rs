use thiserror::Error;

/// Errors produced by the analysis routines and file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid manifold spec: {0}")]
    InvalidSpec(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("missing labels: {0}")]
    MissingLabels(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range(msg: impl Into<String>) -> Error {
    Error::OutOfRange(msg.into())
}
