//! Error type shared by all solver modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument left the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver exhausted its iteration budget.
    #[error("{what} did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A root bracketing scan found no sign change.
    #[error("no root of {what} bracketed in ({lo}, {hi}]")]
    NoRoot { what: &'static str, lo: f64, hi: f64 },

    #[error("unknown preset `{name}` (known presets: {known})")]
    UnknownPreset { name: String, known: String },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    /// Requested an equilibrium property of a dynamically unstable state.
    #[error("unstable configuration: {0}")]
    Unstable(String),

    #[error("config error: {0}")]
    Config(String),

    /// A floating-point intermediate left its valid range.
    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    /// Adaptive integration shrank the step below representable size.
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("NaN detected in {context} at step {step}")]
    NanDetected { context: &'static str, step: usize },

    #[error("{0}")]
    InvalidInput(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
