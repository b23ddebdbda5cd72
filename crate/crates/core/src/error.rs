use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index {index} out of range for grid with {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A parameter violated one of its documented constraints. The message
    /// names the constraint, e.g. `s=1 requires k=0`.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("non-finite energy at step {step}")]
    NonFiniteEnergy { step: usize },

    #[error("result {0} is not finite")]
    NonFiniteResult(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unsupported input {path}: {message}")]
    Unsupported { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("report serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFiniteEnergy { .. } | Error::NonFiniteResult(_))
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
