use thiserror::Error;

/// Errors surfaced by state construction, propagation, and the vertical
/// eigensolver.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian: max deviation {defect:.3e} exceeds {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:.3e} below {tol:.3e}")]
    NotPositiveSemidefinite { min_eig: f64, tol: f64 },

    #[error("trace deviates from one by {defect:.3e} (tolerance {tol:.3e})")]
    NotUnitTrace { defect: f64, tol: f64 },

    #[error("non-finite entry encountered in {0}")]
    NonFinite(String),

    #[error("cannot normalize a zero state vector")]
    ZeroState,

    #[error("invalid basis label: {0}")]
    InvalidLabel(String),

    #[error("pulse area is {area:.6e} rad, expected {expected:.6e} rad within {tol:.1e}")]
    UnnormalizedPulse { area: f64, expected: f64, tol: f64 },

    #[error("invalid pulse parameter: {0}")]
    InvalidPulse(String),

    #[error("invalid gate parameter: {0}")]
    InvalidGate(String),

    #[error("invalid dissipation channel: {0}")]
    InvalidChannel(String),

    #[error("state invariant `{invariant}` violated at t = {time_ns} ns: {detail}")]
    InvariantViolation {
        invariant: &'static str,
        time_ns: f64,
        detail: String,
    },

    #[error("coordinate out of range: {0}")]
    InvalidCoordinate(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid level index: {0}")]
    InvalidLevel(String),

    #[error("eigensolver failed to converge: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
