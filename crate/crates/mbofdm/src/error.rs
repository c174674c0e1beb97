//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric or structural parameter is outside its valid domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A scenario file failed to parse; line numbers are 1-based.
    #[error("scenario line {line}: {msg}")]
    Scenario { line: usize, msg: String },

    /// Calibration could not produce a usable result.
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// A cache or output file had an unexpected format.
    #[error("malformed file {path}: {msg}")]
    FileFormat { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand used throughout validation code.
    pub fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
