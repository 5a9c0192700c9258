use alloc::string::String;

/// Errors raised by the distributions, surrogate, and optimizer routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("empty elite set")]
    EmptyEliteSet,

    #[error("degenerate responsibilities")]
    DegenerateResponsibilities,

    #[error("ill-conditioned Gram matrix")]
    IllConditionedGram,

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("objective returned NaN at x={0:?}")]
    ObjectiveNan(alloc::vec::Vec<f64>),

    #[error("schedule called out of order: expected iteration {expected}, got {actual}")]
    ScheduleOutOfOrder { expected: usize, actual: usize },

    #[error("grid too large ({0} points)")]
    GridTooLarge(u64),
}

pub type Result<T> = core::result::Result<T, Error>;
