//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A Cholesky pivot fell below the underflow guard; the matrix is not
    /// positive definite (e.g. an empirical covariance with fewer samples
    /// than dimensions).
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The interference matrix has zero power, so no scaling can reach a
    /// target SIR.
    #[error("interference matrix has zero power, cannot scale to target SIR")]
    ZeroInterference,

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// An asymptotic variance evaluated to a non-positive value. This marks
    /// a degenerate scenario (for instance a zero channel, where the
    /// mutual-information statistic has no fluctuation at this order).
    #[error("asymptotic variance is not positive ({value:e}); degenerate scenario")]
    NonPositiveVariance { value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code class: 2 for validation/parse/IO problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::NoConvergence { .. }
            | Error::NonPositiveVariance { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
