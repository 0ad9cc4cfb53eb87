use thiserror::Error;

/// Reasons a problem instance is rejected.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("need at least two outcomes, got m = {0}")]
    TooFewOutcomes(usize),
    #[error("horizon must be at least 1, got n = {0}")]
    HorizonTooSmall(u32),
    #[error("{field} has {got} entries but m = {expected}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("probability p[{index}] = {value} is not strictly positive")]
    NonPositiveProbability { index: usize, value: String },
    #[error("state price q[{index}] = {value} is not strictly positive")]
    NonPositivePrice { index: usize, value: String },
    #[error("probabilities do not sum to 1 (sum = {sum})")]
    ProbabilitySum { sum: String },
    #[error("quantile level alpha = {0} is outside the open interval (0, 1)")]
    AlphaOutOfRange(String),
    #[error("cannot parse numeric literal {0:?}")]
    BadLiteral(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    Instance(#[from] InstanceError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("support set must be nonempty")]
    EmptySupport,
    #[error("support index {index} out of range for m = {m}")]
    SupportIndex { index: usize, m: usize },
    #[error("operation requires m = 2, got m = {0}")]
    NotBinary(usize),
    #[error("grid oracle limited to m <= 4 and resolution >= 10 (m = {m}, resolution = {resolution})")]
    GridGuard { m: usize, resolution: usize },
    #[error("sweep guard violated: {0}")]
    SweepGuard(String),
    #[error("the restricted family does not intersect the wealth simplex")]
    EmptyFamily,
    #[error("halfspace has {got} coefficients, expected {expected}")]
    FamilyDimension { expected: usize, got: usize },
    #[error("Newton iteration cap of {iterations} reached (gradient residual {residual:e})")]
    IterationCap { iterations: usize, residual: f64 },
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
