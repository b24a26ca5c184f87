use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the bounding engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("vertex {0} is already inserted in the diagram")]
    AlreadyInserted(usize),

    #[error("width must be at least 1")]
    ZeroWidth,

    #[error("decision diagram is incomplete ({inserted} of {n} variables inserted)")]
    Incomplete { inserted: usize, n: usize },

    #[error("no remaining variable to choose from")]
    NoRemainingVariable,

    #[error("empty batch")]
    EmptyBatch,

    #[error("instance too large for the exact oracle: n = {n}, limit {limit}")]
    OracleLimit { n: usize, limit: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
