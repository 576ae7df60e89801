use stowage_core::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("action mask has no valid entry")]
    EmptyMask,
    #[error("length mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] ModelError),
}

pub type Result<T, E = RlError> = std::result::Result<T, E>;
