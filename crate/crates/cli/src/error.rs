use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] chaosclt_core::Error),

    #[error("circulant embedding of size {size} has eigenvalue {value}; use a larger embedding")]
    NegativeSpectrum { size: usize, value: f64 },

    #[error("replica {replica} produced a non-finite value {value}")]
    NonFinite { replica: usize, value: f64 },

    #[error("at least {min} replicas are required, got {got}")]
    TooFewReplicas { min: usize, got: usize },

    #[error("path of length {got} is shorter than n = {need}")]
    ShortPath { need: usize, got: usize },

    #[error("empty sample set")]
    Empty,

    #[error("line {line}: {msg}")]
    Csv { line: u64, msg: String },

    #[error("need at least 3 data rows for a slope, found {0}")]
    TooFewRows(usize),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
