use thiserror::Error;

/// Errors raised anywhere in the testing pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("need at least {min} observations, got {got}")]
    TooFewObservations { min: usize, got: usize },

    #[error("x and y lengths differ ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },

    #[error("non-finite value at observation {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no observation has positive kernel weight near eval point {point} (x = {x}); bandwidth too small")]
    DegenerateNeighborhood { point: usize, x: f64 },

    #[error("no bandwidth in the grid yields valid leave-one-out fits")]
    AllBandwidthsDegenerate,

    #[error("weighted variance estimates vanish over the trimmed range")]
    ZeroDenominator,

    #[error("standardized residuals have zero spread")]
    ZeroResidualSpread,

    #[error("series exceeded the overflow guard at step {step} (|z| = {value:e})")]
    ExplosiveSeries { step: usize, value: f64 },

    #[error("bootstrap replicate {replicate} failed after {attempts} attempts: {source}")]
    ReplicateFailure {
        replicate: usize,
        attempts: usize,
        source: Box<Error>,
    },

    #[error("cell {cell} ({label}): {failures} of {runs} runs aborted")]
    CellFailure {
        cell: usize,
        label: String,
        failures: usize,
        runs: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
