//! Drift, diffusion and deviation-functional constants derived from a
//! scenario.
//!
//! The drift assembly mixes the two slicing conventions of the commutator
//! array on purpose: the sections Theta_l slice the third index, while
//! theta_{l..} and gamma_{l..} slice the first. For Levi-Civita arrays the
//! two coincide up to sign by total antisymmetry, which is exactly why the
//! assembly is validated against the independent GKSL oracle instead of
//! being trusted by convention.
//!
//! Everything here is computed once per scenario and treated as immutable;
//! controls never mutate coefficients.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array3::RealArray3;
use crate::error::CoreError;
use crate::system::SystemSpec;
use crate::tol;
use crate::Result;

/// Frobenius inner product.
#[inline]
pub fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// The 2×2 symplectic block.
fn symplectic_block() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

/// Ito matrix pair (Omega, J) for an even number of vacuum noise channels:
/// J = I_{m/2} (x) [[0,1],[-1,0]], Omega = I_m + iJ.
pub fn build_ito(m: usize) -> Result<(DMatrix<Complex64>, DMatrix<f64>)> {
    if m == 0 || m % 2 != 0 {
        return Err(CoreError::InvalidArgument(format!(
            "channel count must be even and positive, got {m}"
        )));
    }
    let j = DMatrix::identity(m / 2, m / 2).kronecker(&symplectic_block());
    let omega = DMatrix::from_fn(m, m, |a, b| {
        Complex64::new(if a == b { 1.0 } else { 0.0 }, j[(a, b)])
    });
    Ok((omega, j))
}

/// Constant drift pair (A_*, b) of the mean-vector dynamics.
pub fn build_drift(spec: &SystemSpec) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let sc = &spec.sc;
    let n = sc.n;
    let (_, j) = build_ito(spec.channels())?;
    let m = &spec.m_coupling;

    // A_* = 2 Theta <> (E_* + M^T J N)
    //       + 2 sum_l Theta_l M^T (M theta_{l..} + J M gamma_{l..}).
    let effective_energy = &spec.e_star + m.transpose() * &j * &spec.n_offset;
    let mut a_star = sc.theta.diam(&effective_energy)? * 2.0;
    let jm = &j * m;
    for l in 0..n {
        let inner = m * sc.theta.first_slice(l) + &jm * sc.gamma.first_slice(l);
        a_star += sc.theta.section(l) * (m.transpose() * inner) * 2.0;
    }

    // b = 2 [Theta_1 ... Theta_n] col(M^T J M alpha).
    let y = m.transpose() * &j * m * &sc.alpha;
    let b = sc.theta.block_row_vec(&y)? * 2.0;
    Ok((a_star, b))
}

/// Control drift sections A_k = 2 Theta <> K_k, stacked as an (n, n, r)
/// array.
pub fn build_control_sections(spec: &SystemSpec) -> Result<RealArray3> {
    let r = spec.controls();
    let sections: Vec<DMatrix<f64>> = (0..r)
        .map(|k| {
            let col = DVector::from_column_slice(spec.k_ctrl.column(k).as_slice());
            spec.sc.theta.diam(&col).map(|m| m * 2.0)
        })
        .collect::<Result<_>>()?;
    RealArray3::from_sections(&sections)
}

/// All scenario-derived constants: drift data and the deviation-functional
/// data (selection Gram matrix, affine coefficients, initial state of the
/// auxiliary ODE).
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    /// Constant part of the drift matrix.
    pub a_star: DMatrix<f64>,
    /// Constant drift offset of the mean dynamics.
    pub b: DVector<f64>,
    /// Control drift sections A_1..A_r.
    pub control_sections: RealArray3,
    /// Ito matrix of the noise channels.
    pub omega: DMatrix<Complex64>,
    /// Imaginary part of the Ito matrix.
    pub j_ito: DMatrix<f64>,
    /// Selection Gram matrix F^T F, PSD with rank nu.
    pub sigma_mat: DMatrix<f64>,
    /// Real initial second-moment matrix alpha + gamma . mu0.
    pub p0: DMatrix<f64>,
    /// Affine deviation coefficient [sigma_vec | -2 Sigma], n×(n+1).
    pub r_mat: DMatrix<f64>,
    /// Contraction of the Gram matrix with the anticommutator sections.
    pub sigma_vec: DVector<f64>,
    /// Affine deviation offset.
    pub d: f64,
    /// Constant forcing of the auxiliary ODE, b [1 mu0^T].
    pub c: DMatrix<f64>,
    /// Initial auxiliary state [mu0 | P].
    pub z0: DMatrix<f64>,
    /// Commutator array, kept for diffusion evaluation.
    pub theta: RealArray3,
    /// Anticommutator array, kept for the moment-path reduction.
    pub gamma: RealArray3,
    /// Field coupling matrix, kept for diffusion evaluation.
    pub m_coupling: DMatrix<f64>,
    /// Initial mean vector.
    pub mu0: DVector<f64>,
}

impl Coefficients {
    /// Assembles every derived constant and verifies the internal
    /// consistency identities (deviation offset and vanishing initial
    /// control gradient).
    pub fn derive(spec: &SystemSpec) -> Result<Self> {
        let n = spec.n();
        let (omega, j_ito) = build_ito(spec.channels())?;
        let (a_star, b) = build_drift(spec)?;
        let control_sections = build_control_sections(spec)?;

        let sigma_mat = spec.f_select.transpose() * &spec.f_select;
        let p0 = &spec.sc.alpha + spec.sc.gamma.dot(&spec.mu0)?;
        let sigma_vec = spec.sc.gamma.star(&sigma_mat)?;
        let r_mat = DMatrix::from_fn(n, n + 1, |i, jcol| {
            if jcol == 0 {
                sigma_vec[i]
            } else {
                -2.0 * sigma_mat[(i, jcol - 1)]
            }
        });
        let d = 2.0 * frob(&sigma_mat, &p0) - sigma_vec.dot(&spec.mu0);
        let c = DMatrix::from_fn(n, n + 1, |i, jcol| {
            if jcol == 0 {
                b[i]
            } else {
                b[i] * spec.mu0[jcol - 1]
            }
        });
        let z0 = DMatrix::from_fn(n, n + 1, |i, jcol| {
            if jcol == 0 {
                spec.mu0[i]
            } else {
                p0[(i, jcol - 1)]
            }
        });

        let coeffs = Self {
            n,
            m: spec.channels(),
            r: spec.controls(),
            a_star,
            b,
            control_sections,
            omega,
            j_ito,
            sigma_mat,
            p0,
            r_mat,
            sigma_vec,
            d,
            c,
            z0,
            theta: spec.sc.theta.clone(),
            gamma: spec.sc.gamma.clone(),
            m_coupling: spec.m_coupling.clone(),
            mu0: spec.mu0.clone(),
        };

        // d = -<R, z0> by construction of the offset.
        let scale = 1.0 + coeffs.d.abs();
        let defect = (coeffs.d + frob(&coeffs.r_mat, &coeffs.z0)).abs() / scale;
        if defect > tol::STRUCTURAL {
            return Err(CoreError::ModelInconsistency {
                what: "deviation offset d vs -<R, z0>".into(),
                max_err: defect,
            });
        }
        // The initial control gradient vanishes for every physically valid
        // scenario; failure here means the assembly disagrees with the
        // algebra.
        let g0 = coeffs.control_gradient(&coeffs.z0)?;
        if g0.amax() > tol::DRIFT_ORACLE {
            return Err(CoreError::ModelInconsistency {
                what: "control gradient at the initial state".into(),
                max_err: g0.amax(),
            });
        }
        Ok(coeffs)
    }

    /// Full drift matrix A = A_* + sum_k U_k A_k; reduces to A_* at U = 0.
    pub fn assemble_a(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(&self.a_star + self.control_sections.dot(u)?)
    }

    /// Diffusion coefficient 2 (Theta . x) M^T, n×m and linear in x.
    pub fn diffusion(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.theta.dot(x)? * self.m_coupling.transpose() * 2.0)
    }

    /// The control gradient g(v) = (R v^T) * sections; shared with the
    /// deviation-derivative evaluation.
    pub fn control_gradient(&self, v: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.control_sections.star(&(&self.r_mat * v.transpose()))
    }
}
