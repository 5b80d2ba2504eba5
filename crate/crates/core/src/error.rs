use swipt_conic::{ConicError, SolveStatus};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SwiptError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("solver returned {0}")]
    Status(SolveStatus),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = SwiptError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> SwiptError {
    SwiptError::InvalidInput(msg.into())
}
