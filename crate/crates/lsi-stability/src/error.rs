use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by how the CLI maps them to exit codes: parameter and
/// parse problems are usage errors (exit 2), everything else is a numerical
/// failure (exit 3).
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A field-spec string failed to parse.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// Field and rule dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An integrand evaluated to a non-finite value at a quadrature node.
    #[error("non-finite integrand at node {node:?}")]
    Evaluation { node: Vec<f64> },

    /// A built-in density went negative where it must not.
    #[error("negativity at node {node:?}: value {value}")]
    Negativity { node: Vec<f64>, value: f64 },

    /// Division by a vanishing density with a non-vanishing gradient.
    #[error("singular Fisher integrand at node {node:?}")]
    SingularFisher { node: Vec<f64> },

    /// A quantity required to be bounded away from zero degenerated.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A field is missing its gradient where one is required.
    #[error("gradient unavailable: {0}")]
    MissingGradient(String),

    /// A normalization precondition failed (norm or mass off target).
    #[error("normalization failure: {0}")]
    Normalization(String),

    /// Every optimizer restart diverged.
    #[error("optimization failure: {0}")]
    Optimization(String),
}

impl Error {
    /// True for errors that indicate misuse rather than numerical breakdown.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Parameter(_) | Error::Parse { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
