use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} is not positive definite (smallest eigenvalue estimate {margin:e})")]
    NotPositiveDefinite { what: String, margin: f64 },

    #[error("map is not self-adjoint (relative defect {defect:e})")]
    NotSelfAdjoint { defect: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step-size condition violated: {0}")]
    StepCondition(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
