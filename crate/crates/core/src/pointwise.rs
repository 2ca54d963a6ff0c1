//! Pointwise-optimal control: at every instant, minimise the deviation
//! derivative plus a quadratic penalty,
//!
//!   h(z, u) + (1/2) |u|^2_Pi  ->  min_u,
//!
//! whose unique solution is U = -Pi^{-1} g(z). Substituted back, the
//! achieved derivative is f(z) - |g(z)|^2_{Pi^{-1}}, and the closed loop
//! acquires a quadratic nonlinearity since the law is linear in z.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::aux_system::{eval_fg, simulate, Trajectory};
use crate::coefficients::Coefficients;
use crate::control::{ControlLaw, ControlSignal};
use crate::error::CoreError;
use crate::Result;

/// Symmetric positive definite control penalty with a cached factorization.
#[derive(Debug, Clone)]
pub struct PenaltyWeights {
    pub pi: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl PenaltyWeights {
    pub fn new(pi: DMatrix<f64>) -> Result<Self> {
        if pi.nrows() != pi.ncols() {
            return Err(CoreError::InvalidArgument("penalty matrix must be square".into()));
        }
        if (&pi - pi.transpose()).amax() > 1e-12 * (1.0 + pi.amax()) {
            return Err(CoreError::NotPositiveDefinite("penalty matrix is not symmetric".into()));
        }
        let chol = pi
            .clone()
            .cholesky()
            .ok_or_else(|| CoreError::NotPositiveDefinite("penalty matrix".into()))?;
        Ok(Self { pi, chol })
    }

    /// Penalty Pi_eps = Gamma / (2 eps) from a shape matrix and a scale.
    pub fn from_shape_scale(gamma: &DMatrix<f64>, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(CoreError::InvalidArgument(format!(
                "penalty scale must be positive, got {eps}"
            )));
        }
        Self::new(gamma / (2.0 * eps))
    }

    pub fn dim(&self) -> usize {
        self.pi.nrows()
    }

    /// Pi^{-1} v through the cached factorization.
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }

    /// |u|^2_Pi = u^T Pi u.
    pub fn quadratic(&self, u: &DVector<f64>) -> f64 {
        u.dot(&(&self.pi * u))
    }

    /// |g|^2_{Pi^{-1}} = g^T Pi^{-1} g.
    pub fn inv_quadratic(&self, g: &DVector<f64>) -> f64 {
        g.dot(&self.solve(g))
    }
}

/// The per-instant minimiser U = -Pi^{-1} g(z).
pub fn pointwise_law(
    coeffs: &Coefficients,
    weights: &PenaltyWeights,
    z: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    if weights.dim() != coeffs.r {
        return Err(CoreError::DimensionMismatch(format!(
            "penalty is {}x{0}, scenario has {} controls",
            weights.dim(),
            coeffs.r
        )));
    }
    let g = coeffs.control_gradient(z)?;
    Ok(-weights.solve(&g))
}

/// State-feedback wrapper around [`pointwise_law`].
pub struct PointwiseLaw<'a> {
    pub coeffs: &'a Coefficients,
    pub weights: &'a PenaltyWeights,
}

impl ControlLaw for PointwiseLaw<'_> {
    fn control(&self, _t: f64, z: &DMatrix<f64>) -> DVector<f64> {
        pointwise_law(self.coeffs, self.weights, z).expect("dimensions validated at construction")
    }
    fn dim(&self) -> usize {
        self.weights.dim()
    }
}

/// Closed-loop run of the pointwise law together with the two sides of the
/// cost accounting identity
///
///   Delta(tau) + (1/2) int |U|^2_Pi = int (f - (1/2) |g|^2_{Pi^{-1}}),
///
/// both accumulated independently on the same grid.
#[derive(Debug, Clone)]
pub struct PointwiseOutcome {
    pub traj: Trajectory,
    /// Delta(tau) + final penalty.
    pub objective: f64,
    /// Independent accumulation of the right-hand side.
    pub rhs_integral: f64,
}

/// Integrates the quadratically nonlinear closed loop and reports the
/// accounting identity sides.
pub fn simulate_pointwise(
    coeffs: &Coefficients,
    weights: &PenaltyWeights,
    tau: f64,
    dt: f64,
) -> Result<PointwiseOutcome> {
    if weights.dim() != coeffs.r {
        return Err(CoreError::DimensionMismatch(format!(
            "penalty is {}x{0}, scenario has {} controls",
            weights.dim(),
            coeffs.r
        )));
    }
    let law = PointwiseLaw { coeffs, weights };
    let traj = simulate(coeffs, &ControlSignal::Law(&law), Some(weights), tau, dt)?;

    // Right-hand side of the accounting identity, integrated on its own.
    let rhs = |_t: f64, state: &(DMatrix<f64>, f64)| {
        let (z, _) = state;
        let u = pointwise_law(coeffs, weights, z).expect("dims checked");
        let a = &coeffs.a_star + coeffs.control_sections.dot(&u).expect("dims checked");
        let dz = a * z + &coeffs.c;
        let (f, g) = eval_fg(coeffs, z).expect("dims checked");
        (dz, f - 0.5 * weights.inv_quadratic(&g))
    };
    let (_, rhs_integral) =
        crate::linalg::rk4_path(&rhs, 0.0, tau, dt, (coeffs.z0.clone(), 0.0), |_, _, _| {})?;

    Ok(PointwiseOutcome {
        objective: traj.delta_final() + traj.penalty_final(),
        rhs_integral,
        traj,
    })
}

/// Scale bound from the descent condition: for 0 < Pi < |g|^2 / max(0, f) I
/// the achieved derivative f - |g|^2_{Pi^{-1}} is negative. Returns `None`
/// when f(z) <= 0, in which case every positive definite penalty descends.
pub fn small_pi_threshold(coeffs: &Coefficients, z: &DMatrix<f64>) -> Result<Option<f64>> {
    let (f, g) = eval_fg(coeffs, z)?;
    let g_norm_sq = g.norm_squared();
    if g_norm_sq <= 1e-24 {
        return Err(CoreError::NoDescentDirection);
    }
    if f <= 0.0 {
        Ok(None)
    } else {
        Ok(Some(g_norm_sq / f))
    }
}
