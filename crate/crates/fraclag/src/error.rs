use thiserror::Error;

/// Errors shared across the carrier algebra, solvers and oracles.
#[derive(Debug, Clone, Error)]
pub enum FracError {
    /// Gamma evaluated within the pole tolerance of a non-positive integer.
    #[error("gamma pole at x = {x}")]
    Pole { x: f64 },

    /// An operation produced an exponent `<= -1`, leaving the carrier.
    #[error("operation leaves the carrier: exponent {exponent} <= -1")]
    CarrierExit { exponent: f64 },

    /// Argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Series not admissible for a numeric oracle check.
    #[error("oracle requires strictly positive exponents, found {exponent}")]
    UnsupportedSeries { exponent: f64 },

    /// Neumann iterate norm exceeded the growth guard.
    #[error(
        "Neumann iteration diverged: term norm {norm:e} exceeded guard {guard:e} at iteration {iteration}"
    )]
    Divergence {
        norm: f64,
        guard: f64,
        iteration: usize,
    },

    /// Two series with different base points were combined.
    #[error("base point mismatch: {0} vs {1}")]
    BaseMismatch(f64, f64),

    /// Malformed input (non-finite values, empty damping, bad configuration).
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, FracError>;
