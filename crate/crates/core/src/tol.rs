//! Centralized tolerance constants.
//!
//! Two regimes: structural identities that hold to machine precision up to
//! a short chain of exact arithmetic (1e-12), and cross-checks between
//! independently integrated ODE paths, which inherit the RK4 grid error
//! (1e-6 on the default grid).

/// Structural algebra identities (closure, CCR, product dualities).
pub const STRUCTURAL: f64 = 1e-12;

/// Drift-coefficient agreement between the algebraic assembly and the
/// GKSL-generator expansion.
pub const DRIFT_ORACLE: f64 = 1e-10;

/// Cross-checks between two independently integrated ODE routes.
pub const ODE_CROSS_CHECK: f64 = 1e-6;

/// Minimum eigenvalue threshold below which an initial mean vector is
/// rejected as inadmissible.
pub const ADMISSIBILITY: f64 = -1e-10;

/// Slack for quantities that are nonnegative in exact arithmetic but are
/// assembled as differences of O(1) inner products.
pub const NONNEGATIVITY_SLACK: f64 = 1e-9;

/// Per-sample trace-drift bound for density-matrix propagation.
pub const TRACE_DRIFT: f64 = 1e-8;

/// Default integration step as a fraction of the horizon.
pub const DEFAULT_STEP_FRACTION: f64 = 1.0 / 2000.0;
