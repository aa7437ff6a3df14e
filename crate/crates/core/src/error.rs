use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("target {target} is not bracketed by [{lo}, {hi}] (g(lo) = {g_lo}, g(hi) = {g_hi})")]
    Bracket {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
        target: f64,
    },

    #[error("no convergence after {iterations} iterations (best point {best}, residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        best: f64,
        residual: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid step schedule: {} violation(s)", .0.len())]
    InvalidSchedule(Vec<crate::schedule::Violation>),

    #[error("domain failure at iteration {iteration}: {message}")]
    DomainFailure { iteration: usize, message: String },

    #[error("parse error in [{section}] at line {line}: {message}")]
    Parse {
        line: usize,
        section: String,
        message: String,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
