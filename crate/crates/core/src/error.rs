use std::path::PathBuf;

use crate::grid::Space;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("expected a field in {expected:?} space, found {found:?}")]
    SpaceMismatch { expected: Space, found: Space },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("degenerate frequency ({xi1}, {xi2}): |xi . theta0| below threshold")]
    Degenerate { xi1: f64, xi2: f64 },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("missing file {0}")]
    Missing(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
