//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the solvers and domain constructors.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Dimensions of the supplied data do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Input violates a stated precondition (empty data, NaN entries, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A constructed object violates one of its invariants.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// A solver hit its iteration cap before reaching the requested residual.
    #[error("iteration limit reached ({iterations} iterations, residual {residual:.3e})")]
    IterationLimit { iterations: usize, residual: f64 },

    /// The problem handed to a solver is infeasible.
    #[error("infeasible problem: {0}")]
    Infeasible(String),

    /// Two empirical laws that were required to coincide do not.
    #[error("law mismatch: unmatched row {row:?}")]
    LawMismatch { row: Vec<f64> },

    /// A refinement request exceeded the supported dyadic depth.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A kernel exponent outside the supported quadratic case.
    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
