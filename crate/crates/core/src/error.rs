use thiserror::Error;

/// Errors raised by the statistics, oracles and simulation engine.
#[derive(Debug, Error)]
pub enum CovTestError {
    /// A value violates a type invariant (shape, finiteness, ranges).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A mathematical precondition does not hold (non positive-definite null,
    /// pole on a contour, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The dimension-to-sample ratio sits on the excluded value q = 1.
    #[error("dimension ratio q_n = {q} is excluded (q_n must differ from 1 by more than 1e-8)")]
    RatioAtUnity { q: f64 },

    /// An iterative quadrature did not reach its tolerance.
    #[error("quadrature did not converge: {what} (last change {last_change:e} after {levels} refinements)")]
    Quadrature {
        what: &'static str,
        last_change: f64,
        levels: usize,
    },

    /// Inconsistent numerical configuration (e.g. overlapping contours).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CovTestError>;
