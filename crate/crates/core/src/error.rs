use thiserror::Error;

use crate::netcore::NetParams;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Training produced a non-finite objective. Carries the last iterate
    /// whose objective was finite.
    #[error("optimization diverged at iteration {iteration}")]
    Diverged {
        iteration: usize,
        last_finite: Box<NetParams>,
    },

    /// Numerical inconsistency detected by an oracle.
    #[error("inconsistent: {0}")]
    Inconsistent(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
