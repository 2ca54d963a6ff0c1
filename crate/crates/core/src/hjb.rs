//! Finite-horizon synthesis through a perturbative value-function
//! expansion.
//!
//! With the penalty split into shape and scale, Pi = Gamma / (2 eps), the
//! dynamic-programming equation for the value Psi(t, v) of the
//! terminal-plus-integral cost becomes a one-parameter family
//!
//!   dPsi/dt + <dPsi/dv, A_* v + c> = eps |(dPsi/dv v^T) . sections|^2_{Gamma^{-1}},
//!
//! with terminal value <R, v> + d. The zeroth-order term rides the free
//! flow and is closed form,
//!
//!   Psi0(t, v) = <R, e^{(tau-t)A_*} v + int_0^{tau-t} e^{sA_*} ds c> + d,
//!
//! with gradient e^{(tau-t)A_*^T} R. The first-order term is an exact
//! quadratic form in w = vec(v): Psi1 = w^T S(t) w + s(t)^T w + s0(t),
//! whose coefficients obey backward linear ODEs
//!
//!   S' = C(t) - S L - L^T S,   s' = -2 S h - L^T s,   s0' = -s^T h,
//!
//! with L = I (x) A_*, h = vec(c), terminal values zero, and the source
//! C(t) assembled from the squared zeroth-order control direction. The
//! controls are u^(k) = -2 Gamma^{-1}((dPsi^(k)/dv v^T) . sections) and the
//! applied law is the first-order truncation eps u^(0) + eps^2 u^(1).
//!
//! Two independent evaluations of Psi1 (the backward coefficient sweep and
//! a per-point quadrature along the forward characteristic) must agree;
//! that cross-check gates trust in the closed loop.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::aux_system::{simulate, Trajectory};
use crate::coefficients::{frob, Coefficients};
use crate::control::{ControlLaw, ControlSignal};
use crate::error::CoreError;
use crate::linalg::{expm, expm_and_integral, rk4_path, rk4_step, uniform_grid};
use crate::pointwise::PenaltyWeights;
use crate::Result;

/// Memory guard for the stored quadratic-coefficient grid.
const MAX_GRID_ENTRIES: usize = 50_000_000;

/// Quadratic-form coefficients of the first-order term on a uniform grid.
#[derive(Debug, Clone)]
struct Psi1Grid {
    /// Grid step; half the simulation step it was solved for, so that RK4
    /// stage times land on nodes.
    h: f64,
    s_mats: Vec<DMatrix<f64>>,
    s_vecs: Vec<DVector<f64>>,
    s_zeros: Vec<f64>,
}

/// Evaluable value-function expansion: closed-form affine zeroth order plus
/// an exact time-varying quadratic first order.
#[derive(Debug, Clone)]
pub struct ValueExpansion {
    /// Horizon of the underlying cost.
    pub tau: f64,
    /// Reference scale of the penalty split Pi = Gamma / (2 eps).
    pub epsilon: f64,
    /// Shape matrix Gamma (symmetric positive definite).
    pub gamma: DMatrix<f64>,
    gamma_chol: Cholesky<f64, Dyn>,
    gamma_inv: DMatrix<f64>,
    term1: Option<Psi1Grid>,
}

/// Residual of the one-parameter dynamic-programming equation at a point,
/// together with the gap between the finite-difference and exact time
/// derivatives used to form it.
#[derive(Debug, Clone, Copy)]
pub struct HjbResidual {
    /// |dPsi/dt + <dPsi/dv, A_* v + c> - eps |...|^2| with the exact time
    /// derivative.
    pub value: f64,
    /// |central-difference dPsi/dt - exact dPsi/dt| at step 1e-4 tau.
    pub fd_gap: f64,
}

/// Closed-loop outcome of the first-order law.
#[derive(Debug, Clone)]
pub struct HjbOutcome {
    pub traj: Trajectory,
    /// Terminal deviation.
    pub delta_tau: f64,
    /// Accumulated quadratic penalty.
    pub penalty: f64,
    /// Total cost Delta(tau) + penalty.
    pub phi: f64,
    /// (Psi0 + eps Psi1)(0, z0), the expansion's cost prediction.
    pub bellman_reference: f64,
}

fn vec_mat(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

fn unvec(v: &DVector<f64>, nrows: usize, ncols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(nrows, ncols, v.as_slice())
}

/// S (I (x) A): right-multiply each n-column block of S by A.
fn mul_blockdiag_right(s: &DMatrix<f64>, a: &DMatrix<f64>, blocks: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let rows = s.nrows();
    let mut out = DMatrix::zeros(rows, s.ncols());
    for j in 0..blocks {
        let prod = s.view((0, j * n), (rows, n)) * a;
        out.view_mut((0, j * n), (rows, n)).copy_from(&prod);
    }
    out
}

/// (I (x) A^T) S: left-multiply each n-row block of S by A^T.
fn mul_blockdiag_left_t(a: &DMatrix<f64>, s: &DMatrix<f64>, blocks: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let cols = s.ncols();
    let mut out = DMatrix::zeros(s.nrows(), cols);
    let at = a.transpose();
    for i in 0..blocks {
        let prod = &at * s.view((i * n, 0), (n, cols));
        out.view_mut((i * n, 0), (n, cols)).copy_from(&prod);
    }
    out
}

impl ValueExpansion {
    /// Validates the shape matrix and horizon. The first-order term is
    /// absent until [`ValueExpansion::solve_psi1`] runs.
    pub fn new(gamma: DMatrix<f64>, epsilon: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(CoreError::InvalidArgument(format!(
                "horizon must be positive, got {tau}"
            )));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(CoreError::InvalidArgument(format!(
                "penalty scale must be nonnegative, got {epsilon}"
            )));
        }
        if (&gamma - gamma.transpose()).amax() > 1e-12 * (1.0 + gamma.amax()) {
            return Err(CoreError::NotPositiveDefinite("shape matrix is not symmetric".into()));
        }
        let gamma_chol = gamma
            .clone()
            .cholesky()
            .ok_or_else(|| CoreError::NotPositiveDefinite("shape matrix".into()))?;
        let gamma_inv = gamma_chol.inverse();
        Ok(Self { tau, epsilon, gamma, gamma_chol, gamma_inv, term1: None })
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.tau + 1e-12).contains(&t) {
            return Err(CoreError::InvalidArgument(format!(
                "time {t} outside the horizon [0, {}]",
                self.tau
            )));
        }
        Ok(())
    }

    /// Zeroth-order value and its exact gradient in v.
    pub fn psi0(&self, coeffs: &Coefficients, t: f64, v: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
        self.check_time(t)?;
        let (e, integral) = expm_and_integral(&coeffs.a_star, self.tau - t)?;
        let value = frob(&coeffs.r_mat, &(&e * v + &integral * &coeffs.c)) + coeffs.d;
        let gradient = e.transpose() * &coeffs.r_mat;
        Ok((value, gradient))
    }

    /// Exact time derivative of the zeroth-order term.
    fn psi0_dt(&self, coeffs: &Coefficients, t: f64, v: &DMatrix<f64>) -> Result<f64> {
        self.check_time(t)?;
        let e = expm(&(&coeffs.a_star * (self.tau - t)));
        Ok(-frob(&coeffs.r_mat, &(&coeffs.a_star * (&e * v) + &e * &coeffs.c)))
    }

    /// Zeroth-order control direction u^(0)(t, v) =
    /// -2 Gamma^{-1}((e^{(tau-t)A_*^T} R v^T) . sections).
    pub fn u0(&self, coeffs: &Coefficients, t: f64, v: &DMatrix<f64>) -> Result<DVector<f64>> {
        let (_, grad) = self.psi0(coeffs, t, v)?;
        let contracted = coeffs.control_sections.star(&(grad * v.transpose()))?;
        Ok(self.gamma_chol.solve(&contracted) * -2.0)
    }

    /// Source matrix C(t) of the backward coefficient sweep: with
    /// L_k(t) = A_k^T e^{(tau-t)A_*^T} R and Gamma^{-1} = (gi_{kl}),
    /// C = sum_{k,l} gi_{kl} vec(L_k) vec(L_l)^T.
    fn source_matrix(&self, coeffs: &Coefficients, t: f64) -> DMatrix<f64> {
        let n = coeffs.n;
        let big_n = n * (n + 1);
        let r = coeffs.r;
        let w = expm(&(&coeffs.a_star * (self.tau - t))).transpose() * &coeffs.r_mat;
        let mut lmat = DMatrix::zeros(big_n, r);
        for k in 0..r {
            let lk = coeffs.control_sections.section(k).transpose() * &w;
            lmat.column_mut(k).copy_from(&vec_mat(&lk));
        }
        &lmat * &self.gamma_inv * lmat.transpose()
    }

    fn psi1_rhs(
        &self,
        coeffs: &Coefficients,
        hvec: &DVector<f64>,
        t: f64,
        state: &(DMatrix<f64>, (DVector<f64>, f64)),
    ) -> (DMatrix<f64>, (DVector<f64>, f64)) {
        let (s_mat, (s_vec, _)) = state;
        let n = coeffs.n;
        let blocks = n + 1;
        let c_src = self.source_matrix(coeffs, t);
        let ds = &c_src
            - mul_blockdiag_right(s_mat, &coeffs.a_star, blocks)
            - mul_blockdiag_left_t(&coeffs.a_star, s_mat, blocks);
        let lt_s = vec_mat(&(coeffs.a_star.transpose() * unvec(s_vec, n, blocks)));
        let dsv = s_mat * hvec * -2.0 - lt_s;
        let ds0 = -s_vec.dot(hvec);
        (ds, (dsv, ds0))
    }

    /// Backward sweep for the quadratic coefficients of the first-order
    /// term, stored on a grid of step dt/2 so that a closed loop with step
    /// dt evaluates on nodes.
    pub fn solve_psi1(&mut self, coeffs: &Coefficients, dt: f64) -> Result<()> {
        let n = coeffs.n;
        let big_n = n * (n + 1);
        let (sim_steps, sim_h) = uniform_grid(0.0, self.tau, dt)?;
        if sim_steps == 0 {
            return Err(CoreError::InvalidArgument("horizon shorter than one step".into()));
        }
        let h = sim_h / 2.0;
        let len = 2 * sim_steps + 1;
        if len.saturating_mul(big_n * big_n) > MAX_GRID_ENTRIES {
            return Err(CoreError::Capacity(format!(
                "quadratic-coefficient grid needs {} entries; coarsen the step",
                len * big_n * big_n
            )));
        }

        let hvec = vec_mat(&coeffs.c);
        let mut s_mats = vec![DMatrix::zeros(0, 0); len];
        let mut s_vecs = vec![DVector::zeros(0); len];
        let mut s_zeros = vec![0.0; len];
        s_mats[len - 1] = DMatrix::zeros(big_n, big_n);
        s_vecs[len - 1] = DVector::zeros(big_n);

        let rhs = |t: f64, y: &(DMatrix<f64>, (DVector<f64>, f64))| self.psi1_rhs(coeffs, &hvec, t, y);
        let mut state = (s_mats[len - 1].clone(), (s_vecs[len - 1].clone(), 0.0));
        for i in (0..len - 1).rev() {
            let t_upper = (i + 1) as f64 * h;
            state = rk4_step(&rhs, t_upper, &state, -h);
            // Symmetry of S drifts at roundoff level; re-impose it.
            let sym = (&state.0 + state.0.transpose()) * 0.5;
            state.0 = sym;
            if !state.0.iter().all(|x| x.is_finite()) {
                return Err(CoreError::NumericOverflow { t: i as f64 * h });
            }
            s_mats[i] = state.0.clone();
            s_vecs[i] = state.1 .0.clone();
            s_zeros[i] = state.1 .1;
        }
        self.term1 = Some(Psi1Grid { h, s_mats, s_vecs, s_zeros });
        Ok(())
    }

    /// Coefficients (S, s, s0) of the first-order term at an arbitrary
    /// time. Off-node queries take one partial backward step from the node
    /// just above, which keeps the evaluation smooth in t.
    pub fn psi1_coeffs_at(
        &self,
        coeffs: &Coefficients,
        t: f64,
    ) -> Result<(DMatrix<f64>, DVector<f64>, f64)> {
        self.check_time(t)?;
        let grid = self.term1.as_ref().ok_or(CoreError::NotSolved)?;
        let idx_real = t / grid.h;
        let nearest = idx_real.round();
        let snap = 1e-9 * self.tau.max(1.0);
        if (t - nearest * grid.h).abs() <= snap {
            let i = (nearest as usize).min(grid.s_mats.len() - 1);
            return Ok((grid.s_mats[i].clone(), grid.s_vecs[i].clone(), grid.s_zeros[i]));
        }
        let upper = idx_real.ceil() as usize;
        let upper = upper.min(grid.s_mats.len() - 1);
        let t_upper = upper as f64 * grid.h;
        let hvec = vec_mat(&coeffs.c);
        let rhs = |tt: f64, y: &(DMatrix<f64>, (DVector<f64>, f64))| self.psi1_rhs(coeffs, &hvec, tt, y);
        let state = (grid.s_mats[upper].clone(), (grid.s_vecs[upper].clone(), grid.s_zeros[upper]));
        let stepped = rk4_step(&rhs, t_upper, &state, t - t_upper);
        let sym = (&stepped.0 + stepped.0.transpose()) * 0.5;
        Ok((sym, stepped.1 .0, stepped.1 .1))
    }

    /// First-order value and its exact gradient in v.
    pub fn psi1(&self, coeffs: &Coefficients, t: f64, v: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
        let (s_mat, s_vec, s0) = self.psi1_coeffs_at(coeffs, t)?;
        let w = vec_mat(v);
        let value = w.dot(&(&s_mat * &w)) + s_vec.dot(&w) + s0;
        let grad_w = &s_mat * &w * 2.0 + &s_vec;
        Ok((value, unvec(&grad_w, coeffs.n, coeffs.n + 1)))
    }

    /// Exact time derivative of the first-order term at (t, v).
    fn psi1_dt(&self, coeffs: &Coefficients, t: f64, v: &DMatrix<f64>) -> Result<f64> {
        let (s_mat, s_vec, s0) = self.psi1_coeffs_at(coeffs, t)?;
        let hvec = vec_mat(&coeffs.c);
        let (ds, (dsv, ds0)) = self.psi1_rhs(coeffs, &hvec, t, &(s_mat, (s_vec, s0)));
        let w = vec_mat(v);
        Ok(w.dot(&(&ds * &w)) + dsv.dot(&w) + ds0)
    }

    /// First-order control direction u^(1)(t, v) =
    /// -2 Gamma^{-1}((dPsi1/dv v^T) . sections).
    pub fn u1(&self, coeffs: &Coefficients, t: f64, v: &DMatrix<f64>) -> Result<DVector<f64>> {
        let (_, grad) = self.psi1(coeffs, t, v)?;
        let contracted = coeffs.control_sections.star(&(grad * v.transpose()))?;
        Ok(self.gamma_chol.solve(&contracted) * -2.0)
    }

    /// The applied first-order law eps u^(0) + eps^2 u^(1).
    pub fn control_first_order(
        &self,
        coeffs: &Coefficients,
        eps: f64,
        t: f64,
        v: &DMatrix<f64>,
    ) -> Result<DVector<f64>> {
        if eps == 0.0 {
            return Ok(DVector::zeros(coeffs.r));
        }
        Ok(self.u0(coeffs, t, v)? * eps + self.u1(coeffs, t, v)? * (eps * eps))
    }

    /// Independent evaluation of the first-order term by quadrature along
    /// the forward characteristic z' = A_* z + c started at (t, v):
    /// Psi1(t, v) = -int_t^tau |(e^{(tau-s)A_*^T} R z(s)^T) . sections|^2_{Gamma^{-1}} ds.
    pub fn psi1_quadrature(
        &self,
        coeffs: &Coefficients,
        t: f64,
        v: &DMatrix<f64>,
        dt: f64,
    ) -> Result<f64> {
        self.check_time(t)?;
        let rhs = |s: f64, state: &(DMatrix<f64>, f64)| {
            let (z, _) = state;
            let w = expm(&(&coeffs.a_star * (self.tau - s))).transpose() * &coeffs.r_mat;
            let q = coeffs
                .control_sections
                .star(&(&w * z.transpose()))
                .expect("dims fixed by construction");
            let rho = q.dot(&self.gamma_chol.solve(&q));
            (&coeffs.a_star * z + &coeffs.c, rho)
        };
        let (_, acc) = rk4_path(&rhs, t, self.tau, dt, (v.clone(), 0.0), |_, _, _| {})?;
        Ok(-acc)
    }

    /// Residual of the one-parameter dynamic-programming equation for the
    /// truncation Psi0 + eps Psi1 at an interior point. Gradients in v are
    /// exact; the time derivative is exact from the ODE forms and
    /// cross-checked against a central difference with step 1e-4 tau.
    pub fn hjb_residual(
        &self,
        coeffs: &Coefficients,
        t: f64,
        v: &DMatrix<f64>,
        eps: f64,
    ) -> Result<HjbResidual> {
        let fd_step = 1e-4 * self.tau;
        if t - fd_step < 0.0 || t + fd_step > self.tau {
            return Err(CoreError::InvalidArgument(format!(
                "time {t} too close to the boundary for the FD step {fd_step}"
            )));
        }
        let value_at = |tt: f64| -> Result<f64> {
            let (v0, _) = self.psi0(coeffs, tt, v)?;
            if eps == 0.0 {
                return Ok(v0);
            }
            let (v1, _) = self.psi1(coeffs, tt, v)?;
            Ok(v0 + eps * v1)
        };
        let dt_fd = (value_at(t + fd_step)? - value_at(t - fd_step)?) / (2.0 * fd_step);
        let mut dt_exact = self.psi0_dt(coeffs, t, v)?;
        if eps != 0.0 {
            dt_exact += eps * self.psi1_dt(coeffs, t, v)?;
        }

        let (_, grad0) = self.psi0(coeffs, t, v)?;
        let grad = if eps == 0.0 {
            grad0
        } else {
            let (_, grad1) = self.psi1(coeffs, t, v)?;
            grad0 + grad1 * eps
        };
        let transport = frob(&grad, &(&coeffs.a_star * v + &coeffs.c));
        let q = coeffs.control_sections.star(&(&grad * v.transpose()))?;
        let nonlinear = eps * q.dot(&self.gamma_chol.solve(&q));
        Ok(HjbResidual {
            value: (dt_exact + transport - nonlinear).abs(),
            fd_gap: (dt_fd - dt_exact).abs(),
        })
    }

    /// Closed loop under the first-order law with penalty Gamma / (2 eps).
    /// eps = 0 degenerates to the zero-control flow with zero penalty.
    pub fn simulate_hjb(&self, coeffs: &Coefficients, eps: f64, dt: f64) -> Result<HjbOutcome> {
        if self.term1.is_none() {
            return Err(CoreError::NotSolved);
        }
        if eps < 0.0 {
            return Err(CoreError::InvalidArgument(format!(
                "penalty scale must be nonnegative, got {eps}"
            )));
        }
        let law = self.first_order_law(coeffs, eps);
        let penalty = if eps > 0.0 {
            Some(PenaltyWeights::from_shape_scale(&self.gamma, eps)?)
        } else {
            None
        };
        let traj = simulate(coeffs, &ControlSignal::Law(&law), penalty.as_ref(), self.tau, dt)?;

        let (psi0_at_start, _) = self.psi0(coeffs, 0.0, &coeffs.z0)?;
        let (psi1_at_start, _) = self.psi1(coeffs, 0.0, &coeffs.z0)?;
        Ok(HjbOutcome {
            delta_tau: traj.delta_final(),
            penalty: traj.penalty_final(),
            phi: traj.phi_final(),
            bellman_reference: psi0_at_start + eps * psi1_at_start,
            traj,
        })
    }

    /// The truncated law as a reusable state-feedback control. Panics on
    /// evaluation if the first-order term was never solved.
    pub fn first_order_law<'a>(
        &'a self,
        coeffs: &'a Coefficients,
        eps: f64,
    ) -> FirstOrderLaw<'a> {
        FirstOrderLaw { expansion: self, coeffs, eps }
    }

    /// Maximum drift of the instantaneous control Hamiltonian
    /// H(t) = <dPsi/dv, A_* z + c> - (1/2)|u|^2_{Pi_eps} along a closed-loop
    /// trajectory. Exact constancy holds only for the exact value function;
    /// the truncation drifts at second order in eps.
    pub fn pontryagin_diagnostic(
        &self,
        coeffs: &Coefficients,
        eps: f64,
        traj: &Trajectory,
    ) -> Result<f64> {
        let mut h0 = 0.0;
        let mut drift: f64 = 0.0;
        for (i, (t, z)) in traj.times.iter().zip(&traj.z).enumerate() {
            let (_, grad0) = self.psi0(coeffs, *t, z)?;
            let grad = if eps == 0.0 {
                grad0
            } else {
                let (_, grad1) = self.psi1(coeffs, *t, z)?;
                grad0 + grad1 * eps
            };
            let transport = frob(&grad, &(&coeffs.a_star * z + &coeffs.c));
            let penalty_term = if eps > 0.0 {
                let u = self.control_first_order(coeffs, eps, *t, z)?;
                // |u|^2_{Pi_eps} with Pi_eps = Gamma / (2 eps).
                u.dot(&(&self.gamma * &u)) / (4.0 * eps)
            } else {
                0.0
            };
            let h = transport - penalty_term;
            if i == 0 {
                h0 = h;
            } else {
                drift = drift.max((h - h0).abs());
            }
        }
        Ok(drift)
    }
}

/// The truncated law as a state-feedback control.
pub struct FirstOrderLaw<'a> {
    expansion: &'a ValueExpansion,
    coeffs: &'a Coefficients,
    eps: f64,
}

impl ControlLaw for FirstOrderLaw<'_> {
    fn control(&self, t: f64, z: &DMatrix<f64>) -> DVector<f64> {
        self.expansion
            .control_first_order(self.coeffs, self.eps, t, z)
            .expect("expansion solved before simulation")
    }
    fn dim(&self) -> usize {
        self.coeffs.r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aux_system::delta_of_z;
    use crate::pauli::pauli_basis;
    use crate::system::{InitialState, SystemSpec};
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn demo_spec() -> SystemSpec {
        let basis = pauli_basis(1).unwrap();
        SystemSpec::new(
            basis,
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
            DMatrix::identity(3, 3),
            DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            DVector::zeros(2),
            DMatrix::identity(3, 3),
            InitialState::Mean(DVector::from_vec(vec![0.0, 0.0, 1.0])),
        )
        .unwrap()
    }

    fn no_authority_spec() -> SystemSpec {
        let basis = pauli_basis(1).unwrap();
        SystemSpec::new(
            basis,
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
            DMatrix::zeros(3, 1),
            DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            DVector::zeros(2),
            DMatrix::identity(3, 3),
            InitialState::Mean(DVector::from_vec(vec![0.0, 0.0, 1.0])),
        )
        .unwrap()
    }

    fn solved_expansion(spec: &SystemSpec, dt: f64) -> (Coefficients, ValueExpansion) {
        let coeffs = Coefficients::derive(spec).unwrap();
        let r = spec.controls();
        let mut exp = ValueExpansion::new(DMatrix::identity(r, r), 0.05, 1.0).unwrap();
        exp.solve_psi1(&coeffs, dt).unwrap();
        (coeffs, exp)
    }

    #[test]
    fn terminal_conditions_are_exact() {
        let spec = demo_spec();
        let (coeffs, exp) = solved_expansion(&spec, 1e-3);
        let v = &coeffs.z0 + DMatrix::from_fn(3, 4, |i, j| 0.1 * (i as f64 + j as f64));
        let (value, _) = exp.psi0(&coeffs, exp.tau, &v).unwrap();
        assert_abs_diff_eq!(value, frob(&coeffs.r_mat, &v) + coeffs.d, epsilon = 1e-12);

        let (s_mat, s_vec, s0) = exp.psi1_coeffs_at(&coeffs, exp.tau).unwrap();
        assert_eq!(s_mat.amax(), 0.0);
        assert_eq!(s_vec.amax(), 0.0);
        assert_eq!(s0, 0.0);

        let u1 = exp.u1(&coeffs, exp.tau, &v).unwrap();
        assert_eq!(u1.amax(), 0.0);
    }

    #[test]
    fn psi0_matches_zero_control_deviation() {
        let spec = demo_spec();
        let (coeffs, exp) = solved_expansion(&spec, 1e-3);
        let traj = simulate(&coeffs, &ControlSignal::Zero { dim: 3 }, None, 1.0, 5e-4).unwrap();
        let (value, _) = exp.psi0(&coeffs, 0.0, &coeffs.z0).unwrap();
        let rel = (value - traj.delta_final()).abs() / (1.0 + traj.delta_final().abs());
        assert!(rel <= 1e-6, "Psi0(0, z0) vs free-flow deviation: {rel:.3e}");
    }

    #[test]
    fn psi0_gradient_is_pullback_of_r() {
        let spec = demo_spec();
        let (coeffs, exp) = solved_expansion(&spec, 1e-3);
        // Frozen flow: A_* = 0 would give gradient R at all t; here compare
        // against a finite difference instead.
        let t = 0.4;
        let v = coeffs.z0.clone();
        let (_, grad) = exp.psi0(&coeffs, t, &v).unwrap();
        let h = 1e-6;
        for probe in 0..4 {
            let mut dv = DMatrix::zeros(3, 4);
            dv[(probe % 3, probe)] = h;
            let (up, _) = exp.psi0(&coeffs, t, &(&v + &dv)).unwrap();
            let (dn, _) = exp.psi0(&coeffs, t, &(&v - &dv)).unwrap();
            let fd = (up - dn) / (2.0 * h);
            assert_abs_diff_eq!(fd, grad[(probe % 3, probe)], epsilon = 1e-7);
        }
    }

    #[test]
    fn u0_vanishes_at_terminal_initial_state() {
        let spec = demo_spec();
        let (coeffs, exp) = solved_expansion(&spec, 1e-3);
        let u = exp.u0(&coeffs, exp.tau, &coeffs.z0).unwrap();
        assert!(u.amax() <= 1e-9, "u0(tau, z0) = {:.3e}", u.amax());
    }

    #[test]
    fn psi1_backward_sweep_matches_characteristics_quadrature() {
        let spec = demo_spec();
        let (coeffs, exp) = solved_expansion(&spec, 1e-3);
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..5 {
            let i = rng.random_range(0..=2000usize);
            let t = i as f64 * (1.0 / 2000.0);
            let v = &coeffs.z0
                + DMatrix::from_fn(3, 4, |_, _| rng.random_range(-0.3..0.3));
            let (direct, _) = exp.psi1(&coeffs, t, &v).unwrap();
            let quad = exp.psi1_quadrature(&coeffs, t, &v, 5e-4).unwrap();
            let rel = (direct - quad).abs() / (1.0 + quad.abs());
            assert!(rel <= 1e-5, "psi1 routes disagree at t={t}: {direct} vs {quad}");
            assert!(direct <= 1e-10, "psi1 must be nonpositive, got {direct}");
        }
    }

    #[test]
    fn psi1_gradient_matches_finite_differences() {
        let spec = demo_spec();
        let (coeffs, exp) = solved_expansion(&spec, 1e-3);
        let t = 0.3;
        let v = &coeffs.z0 + DMatrix::from_fn(3, 4, |i, j| 0.05 * ((i * 5 + j) as f64).cos());
        let (_, grad) = exp.psi1(&coeffs, t, &v).unwrap();
        let u1 = exp.u1(&coeffs, t, &v).unwrap();
        // Reconstruct u1 from the finite-difference gradient.
        let h = 1e-6;
        let mut fd_grad = DMatrix::zeros(3, 4);
        for col in 0..4 {
            for row in 0..3 {
                let mut dv = DMatrix::zeros(3, 4);
                dv[(row, col)] = h;
                let (up, _) = exp.psi1(&coeffs, t, &(&v + &dv)).unwrap();
                let (dn, _) = exp.psi1(&coeffs, t, &(&v - &dv)).unwrap();
                fd_grad[(row, col)] = (up - dn) / (2.0 * h);
            }
        }
        let rel = (&fd_grad - &grad).amax() / (1.0 + grad.amax());
        assert!(rel <= 1e-5, "gradient mismatch {rel:.3e}");
        let contracted = coeffs.control_sections.star(&(fd_grad * v.transpose())).unwrap();
        let u1_fd = exp.gamma_chol.solve(&contracted) * -2.0;
        let rel_u = (&u1_fd - &u1).amax() / (1.0 + u1.amax());
        assert!(rel_u <= 1e-5, "u1 mismatch {rel_u:.3e}");
    }

    #[test]
    fn residual_vanishes_at_zeroth_order_and_scales_quadratically() {
        let spec = demo_spec();
        let (coeffs, exp) = solved_expansion(&spec, 1e-3);
        let mut rng = StdRng::seed_from_u64(9);
        let t = 0.55;
        let v = &coeffs.z0 + DMatrix::from_fn(3, 4, |_, _| rng.random_range(-0.2..0.2));

        let r0 = exp.hjb_residual(&coeffs, t, &v, 0.0).unwrap();
        assert!(r0.value <= 1e-8, "transport residual {:.3e}", r0.value);

        // Small enough that the quadratic defect dominates the cubic tail.
        let eps = 0.02;
        let r1 = exp.hjb_residual(&coeffs, t, &v, eps).unwrap();
        let r2 = exp.hjb_residual(&coeffs, t, &v, eps / 2.0).unwrap();
        let ratio = r1.value / r2.value;
        assert!(
            (3.5..=4.5).contains(&ratio),
            "defect ratio {ratio:.2} outside [3.5, 4.5] ({} vs {})",
            r1.value,
            r2.value
        );
        // FD and exact time derivatives agree to the FD truncation order.
        assert!(r1.fd_gap <= 1e-5, "fd gap {:.3e}", r1.fd_gap);
    }

    #[test]
    fn no_control_authority_collapses_to_transport() {
        let spec = no_authority_spec();
        let (coeffs, exp) = solved_expansion(&spec, 1e-3);
        let v = &coeffs.z0 + DMatrix::from_fn(3, 4, |i, j| 0.07 * (i as f64 - j as f64));
        for eps in [0.0, 0.05, 0.4] {
            let r = exp.hjb_residual(&coeffs, 0.5, &v, eps).unwrap();
            assert!(r.value <= 1e-8, "eps={eps}: residual {:.3e}", r.value);
        }
        let (p1, _) = exp.psi1(&coeffs, 0.2, &v).unwrap();
        assert_eq!(p1, 0.0);

        let out = exp.simulate_hjb(&coeffs, 0.05, 1e-3).unwrap();
        let (psi0, _) = exp.psi0(&coeffs, 0.0, &coeffs.z0).unwrap();
        let rel = (out.phi - psi0).abs() / (1.0 + psi0.abs());
        assert!(rel <= 1e-6, "no-authority cost vs Psi0: {rel:.3e}");
        let drift = exp.pontryagin_diagnostic(&coeffs, 0.05, &out.traj).unwrap();
        assert!(drift <= 1e-8, "drift {drift:.3e}");
    }

    #[test]
    fn closed_loop_cost_defect_scales_quadratically() {
        let spec = demo_spec();
        let (coeffs, exp) = solved_expansion(&spec, 1e-3);
        let defect = |eps: f64| {
            let out = exp.simulate_hjb(&coeffs, eps, 1e-3).unwrap();
            (out.phi - out.bellman_reference).abs()
        };
        let d1 = defect(0.01);
        let d2 = defect(0.005);
        let ratio = d1 / d2;
        assert!((3.0..=5.0).contains(&ratio), "cost defect ratio {ratio:.2} ({d1:.3e} vs {d2:.3e})");
    }

    #[test]
    fn vanishing_scale_recovers_the_free_flow() {
        let spec = demo_spec();
        let (coeffs, exp) = solved_expansion(&spec, 1e-3);
        let free = simulate(&coeffs, &ControlSignal::Zero { dim: 3 }, None, 1.0, 1e-3).unwrap();
        let out = exp.simulate_hjb(&coeffs, 0.0, 1e-3).unwrap();
        assert_eq!(out.penalty, 0.0);
        for (a, b) in out.traj.delta.iter().zip(&free.delta) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        // Small eps: cost approaches the free-flow deviation at rate eps.
        let small = exp.simulate_hjb(&coeffs, 1e-5, 1e-3).unwrap();
        assert!((small.phi - free.delta_final()).abs() <= 5e-4);
    }

    #[test]
    fn pontryagin_drift_scales_quadratically() {
        let spec = demo_spec();
        let (coeffs, exp) = solved_expansion(&spec, 1e-3);
        let drift_at = |eps: f64| {
            let out = exp.simulate_hjb(&coeffs, eps, 1e-3).unwrap();
            exp.pontryagin_diagnostic(&coeffs, eps, &out.traj).unwrap()
        };
        let zero = drift_at(0.0);
        assert!(zero <= 1e-8, "free-flow drift {zero:.3e}");
        let d1 = drift_at(0.005);
        let d2 = drift_at(0.0025);
        let ratio = d1 / d2;
        assert!((3.0..=5.0).contains(&ratio), "drift ratio {ratio:.2} ({d1:.3e} vs {d2:.3e})");
    }

    #[test]
    fn affine_readout_holds_along_the_closed_loop() {
        let spec = demo_spec();
        let (coeffs, exp) = solved_expansion(&spec, 1e-3);
        let out = exp.simulate_hjb(&coeffs, 0.05, 1e-3).unwrap();
        for (z, &delta) in out.traj.z.iter().zip(&out.traj.delta) {
            assert_abs_diff_eq!(delta, delta_of_z(&coeffs, z), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(out.phi, out.delta_tau + out.penalty, epsilon = 1e-12);
    }

    #[test]
    fn evaluation_before_solve_is_a_state_error() {
        let spec = demo_spec();
        let coeffs = Coefficients::derive(&spec).unwrap();
        let exp = ValueExpansion::new(DMatrix::identity(3, 3), 0.05, 1.0).unwrap();
        assert!(matches!(exp.psi1(&coeffs, 0.5, &coeffs.z0), Err(CoreError::NotSolved)));
        assert!(matches!(exp.simulate_hjb(&coeffs, 0.05, 1e-3), Err(CoreError::NotSolved)));
    }

    #[test]
    fn out_of_horizon_times_are_rejected() {
        let spec = demo_spec();
        let (coeffs, exp) = solved_expansion(&spec, 1e-3);
        assert!(exp.psi0(&coeffs, -0.1, &coeffs.z0).is_err());
        assert!(exp.psi0(&coeffs, 1.5, &coeffs.z0).is_err());
        // Residual needs interior room for the FD probe.
        assert!(exp.hjb_residual(&coeffs, 0.0, &coeffs.z0, 0.1).is_err());
        assert!(exp.hjb_residual(&coeffs, 1.0, &coeffs.z0, 0.1).is_err());
    }
}
