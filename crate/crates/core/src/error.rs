use thiserror::Error;

/// Errors raised by the channel model, metrics, samplers and optimizer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid port partition: {0}")]
    Partition(String),

    #[error("scattering matrix is not passive: spectral norm {norm} exceeds 1")]
    NotPassive { norm: f64 },

    #[error("near-singular coupling system (reciprocal condition estimate {rcond:e})")]
    Singular { rcond: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid load configuration: {0}")]
    InvalidLoad(String),

    #[error("invalid illumination: {0}")]
    InvalidIllumination(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("inconsistent state: {0}")]
    InconsistentState(String),

    #[error("finite-difference oracle failed at load index {index}: {source}")]
    Oracle {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("too many singular draws: {singular} of {attempts} attempts")]
    PathologicalEnvironment { singular: usize, attempts: usize },

    #[error("optimization failed on every start: {0}")]
    OptimizationFailed(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;
