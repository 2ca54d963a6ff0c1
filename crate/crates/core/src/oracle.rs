//! First-principles verification against the GKSL generator on the matrix
//! representation.
//!
//! The drift and diffusion coefficients of the reduced dynamics are
//! assembled twice, through unrelated encodings:
//! - algebraically, from the structure constants (the `coefficients`
//!   module);
//! - spectrally, by applying the vacuum-field generator
//!
//!     G(X) = i[H, X] + (1/2) sum_{j,k} Omega_{jk} (L_j [X, L_k] + [L_j, X] L_k)
//!
//!   to each basis element and re-expanding over {I, X_1..X_n}.
//!
//! A disagreement beyond tolerance means a bug in exactly one of the two
//! encodings and is surfaced as a model-inconsistency error, never patched.
//! The same generator, in predual form, integrates the density matrix and
//! the two-point initial conditions, giving independent mean and
//! correlation paths to compare against the auxiliary ODE.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::coefficients::Coefficients;
use crate::error::CoreError;
use crate::linalg::rk4_path;
use crate::system::SystemSpec;
use crate::tol;
use crate::Result;

/// Matrix representation of one scenario at a fixed control value:
/// Hamiltonian H = (E_* + K U)^T X and couplings L_k = (M X)_k + N_k I.
#[derive(Debug, Clone)]
pub struct MatrixRep {
    pub h: DMatrix<Complex64>,
    pub l_ops: Vec<DMatrix<Complex64>>,
    pub omega: DMatrix<Complex64>,
}

fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl MatrixRep {
    /// Builds the representation for a constant control vector.
    pub fn build(spec: &SystemSpec, u: &DVector<f64>) -> Result<Self> {
        if u.len() != spec.controls() {
            return Err(CoreError::DimensionMismatch(format!(
                "control has length {}, expected {}",
                u.len(),
                spec.controls()
            )));
        }
        let energy = &spec.e_star + &spec.k_ctrl * u;
        let d = spec.basis.dim;
        let mut h = DMatrix::<Complex64>::zeros(d, d);
        for (k, x) in spec.basis.matrices.iter().enumerate() {
            h += x * cr(energy[k]);
        }
        let m = spec.channels();
        let mut l_ops = Vec::with_capacity(m);
        for ch in 0..m {
            let mut l = DMatrix::<Complex64>::identity(d, d) * cr(spec.n_offset[ch]);
            for (k, x) in spec.basis.matrices.iter().enumerate() {
                l += x * cr(spec.m_coupling[(ch, k)]);
            }
            l_ops.push(l);
        }
        let (omega, _) = crate::coefficients::build_ito(m)?;
        Ok(Self { h, l_ops, omega })
    }

    /// Heisenberg-picture generator applied to a system operator.
    pub fn gksl_apply(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let mut out = (&self.h * x - x * &self.h) * i;
        let m = self.l_ops.len();
        for j in 0..m {
            for k in 0..m {
                let w = self.omega[(j, k)] * 0.5;
                if w.norm() == 0.0 {
                    continue;
                }
                let lj = &self.l_ops[j];
                let lk = &self.l_ops[k];
                // L_j [X, L_k] + [L_j, X] L_k.
                let term = lj * (x * lk - lk * x) + (lj * x - x * lj) * lk;
                out += term * w;
            }
        }
        out
    }

    /// Predual (state-picture) generator: trace pairing adjoint of
    /// [`MatrixRep::gksl_apply`]; trace-free and Hermiticity-preserving.
    pub fn gksl_predual(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let mut out = (rho * &self.h - &self.h * rho) * i;
        let m = self.l_ops.len();
        for j in 0..m {
            for k in 0..m {
                let w = self.omega[(j, k)] * 0.5;
                if w.norm() == 0.0 {
                    continue;
                }
                let lj = &self.l_ops[j];
                let lk = &self.l_ops[k];
                let term = lk * rho * lj * cr(2.0) - rho * lj * lk - lj * lk * rho;
                out += term * w;
            }
        }
        out
    }
}

/// Expands G(X_j) over {I, X_1..X_n} for every j and compares the affine
/// coefficients with row j of (A_* + sections . U | b). Returns the largest
/// absolute discrepancy; errors if the generator image leaves the span.
pub fn drift_check(spec: &SystemSpec, coeffs: &Coefficients, u: &DVector<f64>) -> Result<f64> {
    let rep = MatrixRep::build(spec, u)?;
    let a = coeffs.assemble_a(u)?;
    let d = spec.basis.dim as f64;
    let n = spec.n();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let image = rep.gksl_apply(&spec.basis.matrices[j]);
        let c0 = image.trace() / cr(d);
        let mut reconstruction = DMatrix::<Complex64>::identity(spec.basis.dim, spec.basis.dim) * c0;
        for l in 0..n {
            let cl = (&image * &spec.basis.matrices[l]).trace() / cr(d);
            reconstruction += &spec.basis.matrices[l] * cl;
            if cl.im.abs() > tol::DRIFT_ORACLE {
                return Err(CoreError::ModelInconsistency {
                    what: format!("generator image of basis element {j} has complex coefficients"),
                    max_err: cl.im.abs(),
                });
            }
            worst = worst.max((cl.re - a[(j, l)]).abs());
        }
        let residual = (&image - &reconstruction).camax();
        if residual > tol::DRIFT_ORACLE {
            return Err(CoreError::ModelInconsistency {
                what: format!("generator image of basis element {j} leaves the affine span"),
                max_err: residual,
            });
        }
        worst = worst.max((c0.re - coeffs.b[j]).abs()).max(c0.im.abs());
    }
    Ok(worst)
}

/// Compares -i[X_j, L_k] with the basis expansion of the (j, k) entry of
/// the algebraic diffusion coefficient 2 (Theta . x) M^T. Exact algebra, no
/// integration; the discrepancy should sit at machine precision.
pub fn diffusion_check(spec: &SystemSpec, coeffs: &Coefficients) -> Result<f64> {
    let rep = MatrixRep::build(spec, &DVector::zeros(spec.controls()))?;
    let n = spec.n();
    let m = spec.channels();
    let d = spec.basis.dim;
    let i = Complex64::new(0.0, 1.0);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in 0..m {
            let xj = &spec.basis.matrices[j];
            let lk = &rep.l_ops[k];
            let commutator = (xj * lk - lk * xj) * (-i);
            // (j, k) entry of 2 (Theta . X) M^T as an operator:
            // sum_l (2 sum_p theta_{jpl} M_{kp}) X_l.
            let mut algebraic = DMatrix::<Complex64>::zeros(d, d);
            for l in 0..n {
                let mut coeff = 0.0;
                for p in 0..n {
                    coeff += coeffs.theta.get(j, p, l) * spec.m_coupling[(k, p)];
                }
                algebraic += &spec.basis.matrices[l] * cr(2.0 * coeff);
            }
            worst = worst.max((&commutator - &algebraic).camax());
        }
    }
    Ok(worst)
}

/// Density path of the predual master equation under an open-loop control.
#[derive(Debug, Clone)]
pub struct DensityPath {
    pub times: Vec<f64>,
    /// Mean vector mu_k(t) = Tr(rho(t) X_k).
    pub mu: Vec<DVector<f64>>,
    /// Worst trace drift |Tr rho - 1| along the path.
    pub max_trace_drift: f64,
    /// Worst Hermiticity defect along the path.
    pub max_hermiticity_defect: f64,
}

/// Integrates rho' = G*(rho) with RK4 and samples the mean vector. The
/// trace must stay within the drift bound at every sample.
pub fn propagate_density<F>(
    spec: &SystemSpec,
    u_of_t: &F,
    rho0: &DMatrix<Complex64>,
    tau: f64,
    dt: f64,
) -> Result<DensityPath>
where
    F: Fn(f64) -> DVector<f64>,
{
    crate::structure::mean_from_state(&spec.basis, rho0)?;
    let rhs = |t: f64, rho: &DMatrix<Complex64>| {
        let rep = MatrixRep::build(spec, &u_of_t(t)).expect("control dimension fixed");
        rep.gksl_predual(rho)
    };
    let mut path = DensityPath {
        times: Vec::new(),
        mu: Vec::new(),
        max_trace_drift: 0.0,
        max_hermiticity_defect: 0.0,
    };
    let mut failure: Option<CoreError> = None;
    rk4_path(&rhs, 0.0, tau, dt, rho0.clone(), |_, t, rho| {
        if failure.is_some() {
            return;
        }
        let drift = (rho.trace() - cr(1.0)).norm();
        if drift > tol::TRACE_DRIFT {
            failure = Some(CoreError::ModelInconsistency {
                what: format!("trace drift at t = {t:.6}"),
                max_err: drift,
            });
            return;
        }
        path.max_trace_drift = path.max_trace_drift.max(drift);
        path.max_hermiticity_defect =
            path.max_hermiticity_defect.max((rho - rho.adjoint()).camax());
        path.times.push(t);
        path.mu
            .push(DVector::from_fn(spec.n(), |k, _| (rho * &spec.basis.matrices[k]).trace().re));
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(path)
}

/// Two-point correlation path: Re E[X(t) X(0)^T].
#[derive(Debug, Clone)]
pub struct RegressionPath {
    pub times: Vec<f64>,
    pub second: Vec<DMatrix<f64>>,
}

/// Quantum-regression propagation: for each k the non-Hermitian initial
/// condition S_k(0) = X_k rho0 evolves under the predual generator, and
/// E[X_j(t) X_k(0)] = Tr(S_k(t) X_j). The real part of that matrix must
/// reproduce the right block of the auxiliary state.
pub fn regression_two_point<F>(
    spec: &SystemSpec,
    u_of_t: &F,
    rho0: &DMatrix<Complex64>,
    tau: f64,
    dt: f64,
) -> Result<RegressionPath>
where
    F: Fn(f64) -> DVector<f64>,
{
    crate::structure::mean_from_state(&spec.basis, rho0)?;
    let n = spec.n();
    let rhs = |t: f64, s: &Vec<DMatrix<Complex64>>| {
        let rep = MatrixRep::build(spec, &u_of_t(t)).expect("control dimension fixed");
        s.iter().map(|sk| rep.gksl_predual(sk)).collect::<Vec<_>>()
    };
    let initial: Vec<DMatrix<Complex64>> =
        (0..n).map(|k| &spec.basis.matrices[k] * rho0).collect();
    let mut path = RegressionPath { times: Vec::new(), second: Vec::new() };
    rk4_path(&rhs, 0.0, tau, dt, initial, |_, t, s| {
        let block = DMatrix::from_fn(n, n, |j, k| (&s[k] * &spec.basis.matrices[j]).trace().re);
        path.times.push(t);
        path.second.push(block);
    })?;
    Ok(path)
}
