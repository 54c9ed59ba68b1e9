use thiserror::Error;

/// Errors produced while building or checking the truncated model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid level (n = {n}, branch = {branch})")]
    InvalidLevel { n: usize, branch: &'static str },

    #[error("mixing angle undefined: kappa = 0 and detuning = 0 make block {n} degenerate")]
    DegenerateBlock { n: usize },

    #[error("level n = {n} lies outside the truncation n_max = {n_max}")]
    OutOfTruncation { n: usize, n_max: usize },

    #[error("insufficient truncation: {0}")]
    InsufficientTruncation(String),

    #[error("M0 scan exceeded bound {bound} without satisfying the threshold inequality")]
    ThresholdScanExhausted { bound: usize },

    #[error("sequence is not strictly increasing at index {index}: {prev} >= {next}")]
    NotMonotone { index: usize, prev: f64, next: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("operator is not an orthogonal projector (defect {defect:e})")]
    NotProjector { defect: f64 },

    #[error("vectors are not orthonormal (Gram defect {defect:e})")]
    NotOrthonormal { defect: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-positive shifted energy eps[{index}] = {value}")]
    NonPositiveEnergy { index: usize, value: f64 },

    #[error("series truncated too early at x = {x}: tail ratio {ratio:e} exceeds {limit:e}")]
    TailTooLarge { x: f64, ratio: f64, limit: f64 },

    #[error("Hankel matrix of the moments is not positive definite at order {order}")]
    HankelNotPositive { order: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid measurable set: atom id {id} out of range ({len} atoms)")]
    InvalidSet { id: usize, len: usize },

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("y-grid needs at least 2 points, got {0}")]
    YGridTooSmall(usize),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
