//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the numerical and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FppError {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series did not reach the requested accuracy within its term budget.
    #[error("{what} did not converge: best value {value:e}, estimated error {est_abs_error:e}")]
    Convergence {
        what: &'static str,
        value: f64,
        est_abs_error: f64,
    },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature failed after {evaluations} evaluations: best value {value:e}, estimated error {est_abs_error:e}")]
    Quadrature {
        value: f64,
        est_abs_error: f64,
        evaluations: usize,
    },

    /// Integrand returned a non-finite value.
    #[error("integrand is not finite at x = {0:e}")]
    NonFiniteIntegrand(f64),

    #[error("grid steps differ: {0:e} vs {1:e}")]
    MismatchedStep(f64, f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A memory kernel grid is too short for the requested update.
    #[error("kernel support [0, {available:e}] does not cover the interval of length {required:e}")]
    SupportExhausted { available: f64, required: f64 },

    #[error("invalid observation schedule: {0}")]
    InvalidSchedule(String),

    /// The conditioning event was observed too rarely in a Monte Carlo run.
    #[error("only {accepted} of {simulated} paths satisfied the condition (need {required})")]
    InsufficientAcceptance {
        accepted: usize,
        simulated: usize,
        required: usize,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, FppError>;
