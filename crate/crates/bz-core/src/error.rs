//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter or configuration rejected at construction.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A kinetic denominator came within the guard distance of zero.
    #[error("singularity in {context}: u = {value:.6e} is within {guard:.1e} of -q = {minus_q:.6e}")]
    Singularity {
        context: &'static str,
        value: f64,
        guard: f64,
        minus_q: f64,
    },

    /// A field stopped being finite after an operator application.
    #[error("non-finite value produced by {context}{}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    NonFinite {
        context: &'static str,
        step: Option<u64>,
    },

    /// Root finder could not locate a sign change.
    #[error("no sign change found for {what} on ({lo:.6e}, {hi:.6e})")]
    NoBracket { what: &'static str, lo: f64, hi: f64 },

    /// Two fields on different grids were combined.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A query time fell outside the span of a stored trajectory.
    #[error("time {t:.6e} outside trajectory span [{lo:.6e}, {hi:.6e}]")]
    OutOfSpan { t: f64, lo: f64, hi: f64 },

    /// Picard iteration exhausted its budget; carries the delta history.
    #[error("no convergence within {max_iter} iterations (last delta {last:.3e}, tol {tol:.3e})")]
    NoConvergence {
        max_iter: usize,
        last: f64,
        tol: f64,
        history: Vec<f64>,
    },

    /// A proven iteration bound was violated beyond tolerance, which means
    /// an implementation bug or quadrature that is too coarse.
    #[error("iteration diagnostic violated: {what} = {value:.6e} exceeds {bound:.6e} (iterate {iterate})")]
    DiagnosticViolation {
        what: &'static str,
        value: f64,
        bound: f64,
        iterate: usize,
    },

    /// An ODE never reached its target within the time budget.
    #[error("hit time exceeded max_t = {max_t:.6e}: last value {last_value:.12e}, target {target:.12e}")]
    HitTimeExceeded {
        max_t: f64,
        last_value: f64,
        target: f64,
    },

    /// A threshold interval in the comparison chain collapsed.
    #[error("empty interval for {which}: [{lo:.12e}, {hi:.12e}]")]
    EmptyInterval { which: String, lo: f64, hi: f64 },

    /// A monitor asked the simulation to stop.
    #[error("aborted by monitor at step {step}: {reason}")]
    MonitorAbort { step: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
