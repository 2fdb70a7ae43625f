use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("direction must be a unit vector (norm = {norm})")]
    NonUnitDirection { norm: f64 },

    #[error("directions are not orthogonal (inner product = {dot})")]
    NotOrthogonal { dot: f64 },

    #[error("bin {bin} holds {count} samples; at least {min} required")]
    InsufficientBinSamples { bin: usize, count: usize, min: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("oracle incompatible with instance: {0}")]
    OracleIncompatible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
