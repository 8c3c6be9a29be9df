use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is numerically singular")]
    SingularMatrix,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("gamma = {gamma} is infeasible for the H-infinity game")]
    GammaInfeasible { gamma: f64 },

    #[error("primitive `{op}` evaluated outside its domain")]
    Domain { op: &'static str },

    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown name `{name}`; valid names: {}", valid.join(", "))]
    UnknownName { name: String, valid: Vec<String> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_mismatch(what: impl Into<String>) -> Error {
    Error::DimensionMismatch(what.into())
}
