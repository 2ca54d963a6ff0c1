//! Physical scenario data: energy vector, control couplings, field
//! couplings, selection matrix and the initial state.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::CoreError;
use crate::pauli::MatrixBasis;
use crate::structure::{check_admissible, derive_structure, mean_from_state, StructureConstants};
use crate::Result;

/// Initial state of the memory register, either as the mean vector of the
/// system variables or as a density matrix (or both, which must agree).
#[derive(Debug, Clone)]
pub enum InitialState {
    Mean(DVector<f64>),
    Density(DMatrix<Complex64>),
    Both { mu0: DVector<f64>, rho0: DMatrix<Complex64> },
}

/// One memory-control scenario: the variable algebra plus all physical
/// parameters entering the dynamics and the deviation functional.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub sc: StructureConstants,
    pub basis: MatrixBasis,
    /// Uncontrolled energy vector (length n).
    pub e_star: DVector<f64>,
    /// Control coupling matrix, n×r, columns K_1..K_r.
    pub k_ctrl: DMatrix<f64>,
    /// Field coupling matrix, m×n with m even.
    pub m_coupling: DMatrix<f64>,
    /// Field coupling offset (length m).
    pub n_offset: DVector<f64>,
    /// Selection matrix for the variables of interest, nu×n, full row rank.
    pub f_select: DMatrix<f64>,
    /// Initial mean vector (length n), admissible.
    pub mu0: DVector<f64>,
    /// Initial density matrix when one was supplied.
    pub rho0: Option<DMatrix<Complex64>>,
}

impl SystemSpec {
    /// Derives the structure constants from the basis, resolves the initial
    /// state and validates every shape and physical constraint.
    pub fn new(
        basis: MatrixBasis,
        e_star: DVector<f64>,
        k_ctrl: DMatrix<f64>,
        m_coupling: DMatrix<f64>,
        n_offset: DVector<f64>,
        f_select: DMatrix<f64>,
        initial: InitialState,
    ) -> Result<Self> {
        let sc = derive_structure(&basis)?;
        let n = sc.n;

        if e_star.len() != n {
            return Err(CoreError::DimensionMismatch(format!(
                "energy vector has length {}, expected {n}",
                e_star.len()
            )));
        }
        if k_ctrl.nrows() != n {
            return Err(CoreError::DimensionMismatch(format!(
                "control coupling has {} rows, expected {n}",
                k_ctrl.nrows()
            )));
        }
        if k_ctrl.ncols() == 0 {
            return Err(CoreError::InvalidArgument("at least one control channel required".into()));
        }
        let m = m_coupling.nrows();
        if m % 2 != 0 || m == 0 {
            return Err(CoreError::InvalidArgument(format!(
                "channel count must be even and positive, got {m}"
            )));
        }
        if m_coupling.ncols() != n {
            return Err(CoreError::DimensionMismatch(format!(
                "field coupling has {} columns, expected {n}",
                m_coupling.ncols()
            )));
        }
        if n_offset.len() != m {
            return Err(CoreError::DimensionMismatch(format!(
                "coupling offset has length {}, expected {m}",
                n_offset.len()
            )));
        }
        if f_select.ncols() != n || f_select.nrows() == 0 || f_select.nrows() > n {
            return Err(CoreError::DimensionMismatch(format!(
                "selection matrix is {}x{}, expected nu x {n} with 1 <= nu <= {n}",
                f_select.nrows(),
                f_select.ncols()
            )));
        }
        let nu = f_select.nrows();
        let svd = f_select.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|&&s| s > smax * 1e-10).count();
        if rank != nu {
            return Err(CoreError::InvalidArgument(format!(
                "selection matrix is rank deficient: rank {rank} < {nu} rows"
            )));
        }

        let (mu0, rho0) = match initial {
            InitialState::Mean(mu0) => (mu0, None),
            InitialState::Density(rho0) => {
                let mu0 = mean_from_state(&basis, &rho0)?;
                (mu0, Some(rho0))
            }
            InitialState::Both { mu0, rho0 } => {
                let derived = mean_from_state(&basis, &rho0)?;
                let gap = (&derived - &mu0).amax();
                if gap > 1e-10 {
                    return Err(CoreError::StateValidation(format!(
                        "supplied mean vector disagrees with the density matrix by {gap:.3e}"
                    )));
                }
                (mu0, Some(rho0))
            }
        };
        if mu0.len() != n {
            return Err(CoreError::DimensionMismatch(format!(
                "mean vector has length {}, expected {n}",
                mu0.len()
            )));
        }
        let report = check_admissible(&sc, &mu0)?;
        if !report.admissible {
            return Err(CoreError::StateValidation(format!(
                "initial mean vector is inadmissible: covariance min eigenvalue {:.3e}",
                report.min_eigenvalue
            )));
        }

        Ok(Self { sc, basis, e_star, k_ctrl, m_coupling, n_offset, f_select, mu0, rho0 })
    }

    pub fn n(&self) -> usize {
        self.sc.n
    }

    /// Number of noise channels m.
    pub fn channels(&self) -> usize {
        self.m_coupling.nrows()
    }

    /// Number of control inputs r.
    pub fn controls(&self) -> usize {
        self.k_ctrl.ncols()
    }

    /// Number of selected variables nu.
    pub fn selected(&self) -> usize {
        self.f_select.nrows()
    }
}
