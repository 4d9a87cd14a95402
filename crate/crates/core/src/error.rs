use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular: {0}")]
    Singular(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("no result rows to emit")]
    EmptyResults,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
