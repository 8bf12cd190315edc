use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("class `{0}` has too few samples: {1}")]
    TooFewSamples(String, String),

    #[error("unknown class id {0}")]
    UnknownClass(usize),

    #[error("class `{0}` has no training paths in the forest")]
    NoClassPaths(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("schema error at {path}: {msg}")]
    Schema { path: String, msg: String },

    #[error("no feasible candidate for query {query_index} after {attempts} attempts")]
    InfeasibleAugmentation { query_index: usize, attempts: usize },

    #[error("statistics error: {0}")]
    Stats(String),

    #[error("data generation failed: {0}")]
    Generation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
