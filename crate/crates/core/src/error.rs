//! Crate-wide error type.

/// Errors produced by bound evaluation, integration and orbit searches.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An argument lies outside the validity domain of a closed-form bound.
    #[error("outside validity domain: {0}")]
    Domain(String),

    /// The requested time is at or past the comparison solution's blow-up time.
    #[error("time {t} is at or past the blow-up time {t_blowup}")]
    PastBlowup { t: f64, t_blowup: f64 },

    /// Numerical integration could not be completed.
    #[error("integration failed: {0}")]
    Integration(String),

    /// A time-h map was requested but the trajectory escaped before time h.
    #[error("time-{h} map undefined: {reason}")]
    MapUndefined { h: f64, reason: String },

    /// Newton iteration for a periodic orbit did not converge.
    #[error("periodic orbit search: no convergence after {iterations} iterations")]
    NewtonDiverged { iterations: usize },

    /// The shooting Jacobian is numerically singular.
    #[error("periodic orbit search: singular Jacobian (condition number {condition:.3e})")]
    SingularJacobian { condition: f64 },

    /// Newton converged to the origin instead of a nonzero orbit.
    #[error("periodic orbit search: collapsed to trivial orbit")]
    TrivialOrbit,
}

pub type Result<T> = std::result::Result<T, Error>;
