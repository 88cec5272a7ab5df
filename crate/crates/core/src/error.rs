use thiserror::Error;

/// Errors raised by the solvers and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DftrError {
    #[error("parameter `{name}` out of domain: {value} ({reason})")]
    ParameterDomain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error(
        "steady-state solver failed after {iterations} iterations (scaled residual {residual:e})"
    )]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("time integration produced a non-finite state at step {step}")]
    IntegrationFailure { step: usize },

    #[error("zero pivot in tridiagonal elimination at row {row}")]
    ZeroPivot { row: usize },

    #[error("boundary-condition system is singular (determinant {determinant:e})")]
    SingularBoundarySystem { determinant: f64 },

    #[error("Picard iteration did not converge in {iterations} iterations (last update {last_update:e}); split the interval")]
    PicardNonConvergence { iterations: usize, last_update: f64 },

    #[error(
        "decay-rate estimation needs at least {required} records above the floor, found {usable}"
    )]
    Estimation { usable: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, DftrError>;

pub(crate) fn domain<T: crate::Real>(
    name: &'static str,
    value: T,
    reason: &'static str,
) -> DftrError {
    DftrError::ParameterDomain {
        name,
        value: value.as_f64(),
        reason,
    }
}
