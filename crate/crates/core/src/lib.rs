//! Control synthesis for finite-level open quantum memory systems.
//!
//! A memory system with Pauli-like dynamic variables, driven by external
//! quantum noise and steered through time-varying Hamiltonian parameters,
//! reduces to a classical control-affine ODE on n×(n+1) matrices: the
//! mean-square deviation of the stored variables from their initial values
//! is an affine function of that matrix state. This crate builds the
//! reduction from physical data, synthesizes controls two ways (a pointwise
//! descent law and a first-order perturbative solution of the finite-horizon
//! Hamilton-Jacobi-Bellman equation), and verifies every derived drift and
//! moment formula against an independent GKSL-generator oracle on the
//! underlying matrix representation.
//!
//! Module map:
//! - [`array3`], [`linalg`]: tensor-array products, matrix exponentials,
//!   fixed-step RK4 propagation.
//! - [`pauli`], [`structure`]: Pauli-string bases and the algebra
//!   (alpha, beta, Theta, gamma) of the system variables.
//! - [`system`], [`coefficients`]: physical scenario data and the derived
//!   drift/deviation constants.
//! - [`aux_system`]: the classical matrix ODE, deviation evaluation and the
//!   moment-path cross-check.
//! - [`pointwise`]: per-instant minimisation of the deviation derivative
//!   with a quadratic control penalty.
//! - [`hjb`]: finite-horizon value-function expansion and its closed loop.
//! - [`oracle`]: GKSL (Lindblad) first-principles verification.
//! - [`sampling`]: seeded random scenarios for validation sweeps.

pub mod array3;
pub mod aux_system;
pub mod coefficients;
pub mod control;
pub mod error;
pub mod hjb;
pub mod linalg;
pub mod oracle;
pub mod pauli;
pub mod pointwise;
pub mod sampling;
pub mod structure;
pub mod system;
pub mod tol;

pub use array3::{ComplexArray3, RealArray3};
pub use aux_system::{MomentPath, Trajectory};
pub use coefficients::Coefficients;
pub use control::{ControlLaw, ControlSignal, SampledControl};
pub use error::CoreError;
pub use hjb::ValueExpansion;
pub use pauli::MatrixBasis;
pub use pointwise::PenaltyWeights;
pub use structure::StructureConstants;
pub use system::{InitialState, SystemSpec};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
