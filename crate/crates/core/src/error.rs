use thiserror::Error;

/// Errors produced by the allocation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("class probabilities sum to {sum}, which exceeds 1")]
    InvalidProbabilities { sum: f64 },

    #[error("distribution violates the regularity conditions: {0}")]
    RegularityViolation(String),

    #[error("class has zero arrival probability")]
    DegenerateClass,

    #[error("period {t} is outside the horizon 1..={horizon}")]
    InvalidPeriod { t: usize, horizon: usize },

    #[error("threshold for resource {resource} is zero; supergradient is singular")]
    SingularCapacity { resource: usize },

    #[error("capacity split did not converge after {iterations} iterations (relative improvement {improvement:e})")]
    NonConvergence { iterations: usize, improvement: f64 },

    #[error("capacity split is infeasible: {0}")]
    InfeasibleSplit(String),

    #[error("period {t} exceeds the horizon {horizon}")]
    HorizonExceeded { t: usize, horizon: usize },

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("enumeration of {states} assignments exceeds the limit of {limit}")]
    TooLarge { states: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("failed to parse instance: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
