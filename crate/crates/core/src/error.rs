use thiserror::Error;

use crate::measure::GridFunction;

/// Errors raised by the library.
///
/// Hypothesis failures are not errors; they are reported as diagnostics by
/// [`crate::certify::validate_hypotheses`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("mode unsupported: {0}")]
    ModeUnsupported(String),

    #[error("invalid interval [a, b]: {constraint}")]
    IntervalInvalid { constraint: String },

    #[error("rho must be positive, got {0}")]
    RhoNonpositive(f64),

    #[error("cone constant c must lie in (0, 1], got {0}")]
    CInvalid(f64),

    #[error("nonlinearity returned negative value {value} at t = {t}")]
    NegativeValue { t: f64, value: f64 },

    #[error("alpha[gamma] = {0} is outside [0, 1)")]
    AlphaGammaInvalid(f64),

    #[error("delay r = {r} is not smaller than b - a = {gap}")]
    DelayTooLarge { r: f64, gap: f64 },

    #[error("rho = {rho} does not exceed the history norm {psi_norm}")]
    RhoTooSmall { rho: f64, psi_norm: f64 },

    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    NoConvergence {
        residual: f64,
        iterations: usize,
        best: Box<GridFunction>,
    },

    #[error("envelope table does not cover rho = {0}")]
    EnvelopeOutOfRange(f64),

    #[error("nonlinearity has no pointwise evaluator")]
    MissingEvaluator,

    #[error("expression error: {0}")]
    Expr(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
