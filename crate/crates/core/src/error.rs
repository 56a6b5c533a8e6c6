use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |A - A^+| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("dimension {dim} exceeds the dense budget of {budget}")]
    DimensionBudget { dim: usize, budget: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigendecomposition did not converge")]
    Eigendecomposition,

    #[error("integrator step size underflow at t = {time:e} s")]
    StepSizeUnderflow { time: f64 },

    #[error("trace drifted by {defect:e} at t = {time:e} s")]
    TraceDrift { time: f64, defect: f64 },

    #[error("Fock cutoff too small: truncated coherent state loses {loss:e} of its norm")]
    CutoffTooSmall { loss: f64 },

    #[error("extrapolation refused: {0}")]
    ExtrapolationRefused(String),

    #[error("sample grids do not match: {0}")]
    GridMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
