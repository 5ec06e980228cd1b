//! Error taxonomy shared across the crate.

use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed inconsistent dimensions.
    #[error("dimension mismatch: expected {expected}, got {got}{}", context_suffix(.context))]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    /// Caller passed an argument outside the documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A computation produced a non-finite or otherwise unusable value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The requested (geometry, feasible set) pairing has no prox solver.
    #[error("unsupported geometry/set pairing: {0}")]
    UnsupportedGeometry(String),

    /// An iterative subsolver ran out of its budget before reaching tolerance.
    #[error("subsolver did not converge: {what} (residual {residual:.3e} after {iterations} iterations)")]
    SubsolverDivergence {
        what: &'static str,
        residual: f64,
        iterations: usize,
    },

    /// The adaptive line search exhausted its trial budget in one iteration.
    #[error("line search exhausted {max_trials} trials at iteration {iteration} (last constant {last_l:.3e})")]
    LineSearchExhausted {
        iteration: usize,
        max_trials: usize,
        last_l: f64,
    },

    /// An operation was invoked on a problem that does not support it.
    #[error("misuse: {0}")]
    Misuse(String),

    /// Configuration file could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    /// Archive bytes did not match the expected layout.
    #[error("archive error: {0}")]
    Archive(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn context_suffix(context: &str) -> String {
    if context.is_empty() {
        String::new()
    } else {
        format!(" ({context})")
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(expected: usize, got: usize, context: &'static str) -> Self {
        Error::DimensionMismatch {
            expected,
            got,
            context,
        }
    }
}
