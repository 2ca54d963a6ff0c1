//! Algebraic structure constants of the system variables.
//!
//! A basis {X_1, ..., X_n} of Hermitian matrices is multiplicatively closed
//! when every pairwise product is an affine combination of the identity and
//! the basis itself:
//!
//!   X_j X_k = alpha_{jk} I + sum_l beta_{jkl} X_l.
//!
//! alpha is real symmetric, the sections beta_l are Hermitian, and the
//! split beta = gamma + i Theta separates anticommutators (gamma, symmetric
//! sections) from commutators (Theta, antisymmetric sections):
//!
//!   [X, X^T] = 2 i Theta . X.
//!
//! The constants are always derived numerically from a concrete basis by
//! Hilbert-Schmidt projection; there are no hardcoded multiqubit tables.
//! The single-qubit case, where Theta is the Levi-Civita array, serves as a
//! regression target.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array3::{ComplexArray3, RealArray3};
use crate::error::CoreError;
use crate::pauli::MatrixBasis;
use crate::tol;
use crate::Result;

/// The algebra (alpha, beta, Theta, gamma) of n system variables.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    /// Number of system variables.
    pub n: usize,
    /// Real symmetric matrix of identity coefficients.
    pub alpha: DMatrix<f64>,
    /// Complex product coefficients with Hermitian sections.
    pub beta: ComplexArray3,
    /// Im beta: commutator (CCR) array with antisymmetric sections.
    pub theta: RealArray3,
    /// Re beta: anticommutator array with symmetric sections.
    pub gamma: RealArray3,
}

/// Result of the initial-state admissibility test: the minimum eigenvalue
/// of the quantum covariance matrix alpha + beta . mu0 - mu0 mu0^T.
#[derive(Debug, Clone, Copy)]
pub struct AdmissibilityReport {
    pub min_eigenvalue: f64,
    pub admissible: bool,
}

/// Projects every pairwise basis product onto {I, X_1..X_n} and verifies
/// the expansion reconstructs the product within the structural tolerance.
pub fn derive_structure(basis: &MatrixBasis) -> Result<StructureConstants> {
    basis.validate()?;
    let n = basis.len();
    let d = basis.dim as f64;
    let mut alpha = DMatrix::zeros(n, n);
    let mut beta = ComplexArray3::zeros(n);

    let mut worst_residual: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let product = &basis.matrices[j] * &basis.matrices[k];
            let a = product.trace() / Complex64::new(d, 0.0);
            alpha[(j, k)] = a.re;
            let mut reconstruction =
                DMatrix::<Complex64>::identity(basis.dim, basis.dim) * a;
            for l in 0..n {
                let coeff = (&product * &basis.matrices[l]).trace() / Complex64::new(d, 0.0);
                beta.set(j, k, l, coeff);
                reconstruction += &basis.matrices[l] * coeff;
            }
            worst_residual = worst_residual.max((&product - &reconstruction).camax());
            if a.im.abs() > tol::STRUCTURAL {
                return Err(CoreError::ClosureViolation {
                    residual: a.im.abs(),
                    tolerance: tol::STRUCTURAL,
                });
            }
        }
    }
    if worst_residual > tol::STRUCTURAL {
        return Err(CoreError::ClosureViolation {
            residual: worst_residual,
            tolerance: tol::STRUCTURAL,
        });
    }

    let theta = beta.imag();
    let gamma = beta.real();
    let sc = StructureConstants { n, alpha, beta, theta, gamma };
    sc.validate()?;
    Ok(sc)
}

impl StructureConstants {
    /// Checks alpha symmetry, Hermitian beta sections, antisymmetric Theta
    /// sections and symmetric gamma sections.
    pub fn validate(&self) -> Result<()> {
        let sym_defect = (&self.alpha - self.alpha.transpose()).amax();
        if sym_defect > tol::STRUCTURAL {
            return Err(CoreError::InvalidArgument(format!(
                "alpha is not symmetric: defect {sym_defect:.3e}"
            )));
        }
        self.beta.validate_hermitian_sections()?;
        for l in 0..self.n {
            let th = self.theta.section(l);
            if (&th + th.transpose()).amax() > tol::STRUCTURAL {
                return Err(CoreError::InvalidArgument(format!(
                    "Theta section {l} is not antisymmetric"
                )));
            }
            let ga = self.gamma.section(l);
            if (&ga - ga.transpose()).amax() > tol::STRUCTURAL {
                return Err(CoreError::InvalidArgument(format!(
                    "gamma section {l} is not symmetric"
                )));
            }
        }
        Ok(())
    }
}

/// Minimum eigenvalue of the covariance matrix alpha + beta . mu0 -
/// mu0 mu0^T; the mean vector is admissible when it is not significantly
/// negative.
pub fn check_admissible(sc: &StructureConstants, mu0: &DVector<f64>) -> Result<AdmissibilityReport> {
    if mu0.len() != sc.n {
        return Err(CoreError::DimensionMismatch(format!(
            "mean vector has length {}, algebra has {} variables",
            mu0.len(),
            sc.n
        )));
    }
    let mut cov = sc.beta.dot_real(mu0)?;
    for j in 0..sc.n {
        for k in 0..sc.n {
            cov[(j, k)] += Complex64::new(sc.alpha[(j, k)] - mu0[j] * mu0[k], 0.0);
        }
    }
    // Hermitian by construction; eigenvalues are real.
    let eigen = cov.symmetric_eigen();
    let min_eigenvalue = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(AdmissibilityReport { min_eigenvalue, admissible: min_eigenvalue >= tol::ADMISSIBILITY })
}

/// Validates a density matrix and takes the mean vector mu0_k = Tr(rho0 X_k).
pub fn mean_from_state(basis: &MatrixBasis, rho0: &DMatrix<Complex64>) -> Result<DVector<f64>> {
    let d = basis.dim;
    if rho0.nrows() != d || rho0.ncols() != d {
        return Err(CoreError::StateValidation(format!(
            "density matrix is {}x{}, expected {d}x{d}",
            rho0.nrows(),
            rho0.ncols()
        )));
    }
    let herm = (rho0 - rho0.adjoint()).camax();
    if herm > 1e-10 {
        return Err(CoreError::StateValidation(format!(
            "density matrix not Hermitian: defect {herm:.3e}"
        )));
    }
    let trace = rho0.trace();
    if (trace - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(CoreError::StateValidation(format!(
            "density matrix trace is {trace}, expected 1"
        )));
    }
    let eigen = rho0.clone().symmetric_eigen();
    let min_eig = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-10 {
        return Err(CoreError::StateValidation(format!(
            "density matrix not positive semi-definite: min eigenvalue {min_eig:.3e}"
        )));
    }
    Ok(DVector::from_fn(basis.len(), |k, _| (rho0 * &basis.matrices[k]).trace().re))
}
