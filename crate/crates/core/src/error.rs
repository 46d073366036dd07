use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-binary label {value} at row {row}")]
    NonBinaryLabel { row: usize, value: String },

    #[error("both classes must be present ({0})")]
    MissingClass(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("too few instances: {0}")]
    TooFewInstances(String),

    #[error("time {0} is not a grid point")]
    NotOnGrid(f64),

    #[error("degenerate conditioning point: {0}")]
    DegenerateAnchor(String),

    #[error("no signal: trend has zero energy")]
    NoSignal,

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("cannot read dataset {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed dataset at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
