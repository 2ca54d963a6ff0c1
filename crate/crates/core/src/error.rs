//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by construction, validation and simulation routines.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Shapes or sizes of the supplied arguments do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A size cap was exceeded (e.g. too many qubits requested).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A matrix basis is not multiplicatively closed over itself.
    #[error("closure violation: reconstruction residual {residual:.3e} exceeds {tolerance:.1e}")]
    ClosureViolation { residual: f64, tolerance: f64 },

    /// A density matrix failed Hermiticity / trace / positivity validation.
    #[error("state validation failed: {0}")]
    StateValidation(String),

    /// Non-finite values appeared during integration.
    #[error("numeric overflow at t = {t:.6}")]
    NumericOverflow { t: f64 },

    /// Two encodings of the same model disagree beyond tolerance; exactly
    /// one of them is wrong and the discrepancy must be investigated, not
    /// papered over.
    #[error("model inconsistency in {what}: max error {max_err:.3e}")]
    ModelInconsistency { what: String, max_err: f64 },

    /// A penalty or shape matrix is not symmetric positive definite.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// The control gradient vanishes, so no descent direction exists.
    #[error("no descent direction: g(z) = 0 at the queried state")]
    NoDescentDirection,

    /// A value-expansion evaluation was requested before the first-order
    /// term was solved.
    #[error("value expansion term not solved yet: call solve_psi1 first")]
    NotSolved,
}
