use thiserror::Error;

/// Errors produced by every engine in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HitError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("graph is not connected: {0}")]
    NotConnected(String),
    #[error("group closure exceeds the size bound of {bound} elements")]
    GroupTooLarge { bound: usize },
    #[error("matrix is singular to tolerance (pivot {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("interpolation is ill-conditioned: residual {residual:e} exceeds {tolerance:e}")]
    ConditioningFailure { residual: f64, tolerance: f64 },
    #[error("walk is not ergodic: nontrivial character {character} has p^ = 1")]
    NotErgodic { character: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("oracle input too large: {0}")]
    OracleTooLarge(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("could not parse input: {0}")]
    Parse(String),
}

/// Coarse classification used for CLI exit codes and C status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    InvalidInput,
    HypothesisViolation,
    NumericalFailure,
}

impl HitError {
    pub fn class(&self) -> ErrorClass {
        match self {
            HitError::InvalidParameter(_)
            | HitError::GroupTooLarge { .. }
            | HitError::OracleTooLarge(_)
            | HitError::DimensionMismatch { .. }
            | HitError::Parse(_) => ErrorClass::InvalidInput,
            HitError::NotConnected(_)
            | HitError::NotErgodic { .. }
            | HitError::PreconditionViolation(_) => ErrorClass::HypothesisViolation,
            HitError::SingularMatrix { .. }
            | HitError::ConditioningFailure { .. }
            | HitError::NumericalFailure(_) => ErrorClass::NumericalFailure,
        }
    }

    /// Process exit code: 2 invalid input, 3 hypothesis violation, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::InvalidInput => 2,
            ErrorClass::HypothesisViolation => 3,
            ErrorClass::NumericalFailure => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, HitError>;

pub(crate) fn invalid(msg: impl Into<String>) -> HitError {
    HitError::InvalidParameter(msg.into())
}
