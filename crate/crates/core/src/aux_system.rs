//! The classical matrix-valued control-affine system behind the memory
//! deviation functional.
//!
//! The auxiliary state z(t) is the n×(n+1) matrix [mu(t) | P + Q(t)],
//! driven by the nonhomogeneous linear ODE
//!
//!   z' = A(t) z + c,   z(0) = z0 = [mu0 | P],   A(t) = A_* + sections . U(t),
//!
//! and the mean-square deviation of the selected variables from their
//! initial values is the affine readout
//!
//!   Delta(t) = <R, z(t) - z0>.
//!
//! Its time derivative splits into a drift part and a control-linear part,
//!
//!   Delta'(t) = f(z) + g(z)^T U,   f(v) = <R, A_* v + c>,
//!   g(v) = (R v^T) . sections,
//!
//! with g(z0) = 0 for every physically valid scenario. The same deviation
//! can be reached on a second, independent route: integrating the
//! fundamental matrix G and its integral psi, forming the moment blocks
//! Q = (G - I) P + psi b mu0^T and mu = G mu0 + psi b, and contracting
//! Xi = gamma . (mu - mu0) - Q - Q^T against the selection Gram matrix.
//! The two routes must agree to the ODE cross-check tolerance; that
//! equivalence is the backbone of the verification suite.

use nalgebra::{DMatrix, DVector};

use crate::coefficients::{frob, Coefficients};
use crate::control::ControlSignal;
use crate::error::CoreError;
use crate::linalg::rk4_path;
use crate::pointwise::PenaltyWeights;
use crate::Result;

/// Sampled closed- or open-loop run of the auxiliary ODE.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Auxiliary state at each node.
    pub z: Vec<DMatrix<f64>>,
    /// Control evaluated at each node state.
    pub controls: Vec<DVector<f64>>,
    /// Deviation at each node.
    pub delta: Vec<f64>,
    /// Running penalty (1/2) int |U|^2_Pi up to each node.
    pub penalty: Vec<f64>,
    /// Running cost Delta + penalty at each node.
    pub phi: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn delta_final(&self) -> f64 {
        *self.delta.last().expect("trajectory is never empty")
    }

    pub fn penalty_final(&self) -> f64 {
        *self.penalty.last().expect("trajectory is never empty")
    }

    pub fn phi_final(&self) -> f64 {
        *self.phi.last().expect("trajectory is never empty")
    }

    /// Repackages the node controls as an open-loop sampled signal, e.g. to
    /// replay a closed-loop run through an independent evaluation route.
    pub fn control_as_sampled(&self) -> Result<crate::control::SampledControl> {
        let dt = self.times[1] - self.times[0];
        crate::control::SampledControl::new(self.times[0], dt, self.controls.clone())
    }
}

/// Deviation path computed through the fundamental-matrix moment route,
/// together with the moment blocks it produces along the way.
#[derive(Debug, Clone)]
pub struct MomentPath {
    pub times: Vec<f64>,
    pub delta: Vec<f64>,
    /// Mean vector mu(t) at each node.
    pub mu: Vec<DVector<f64>>,
    /// Real two-point block P + Q(t) at each node.
    pub second: Vec<DMatrix<f64>>,
    /// Deviation second-moment matrix Xi(t) at each node.
    pub xi: Vec<DMatrix<f64>>,
}

/// The drift part f(v) = <R, A_* v + c> and the control gradient
/// g(v) = (R v^T) . sections of the deviation derivative.
pub fn eval_fg(coeffs: &Coefficients, v: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let f = frob(&coeffs.r_mat, &(&coeffs.a_star * v + &coeffs.c));
    let g = coeffs.control_gradient(v)?;
    Ok((f, g))
}

/// Affine deviation readout <R, z - z0>; exactly zero at z0. Agrees with
/// the offset form <R, z> + d to the structural tolerance.
pub fn delta_of_z(coeffs: &Coefficients, z: &DMatrix<f64>) -> f64 {
    frob(&coeffs.r_mat, &(z - &coeffs.z0))
}

/// Deviation derivative h(z, U) = f(z) + g(z)^T U; affine in U with
/// gradient g(z).
pub fn delta_dot(coeffs: &Coefficients, z: &DMatrix<f64>, u: &DVector<f64>) -> Result<f64> {
    let (f, g) = eval_fg(coeffs, z)?;
    Ok(f + g.dot(u))
}

/// Second deviation derivative: quadratic in U, affine in U'. At z0 the
/// result does not depend on U' because g(z0) = 0.
pub fn delta_ddot(
    coeffs: &Coefficients,
    z: &DMatrix<f64>,
    u: &DVector<f64>,
    udot: &DVector<f64>,
) -> Result<f64> {
    let drift = &coeffs.a_star * z + &coeffs.c;
    let term_const = frob(&coeffs.r_mat, &(&coeffs.a_star * &drift));

    let w = coeffs.a_star.transpose() * &coeffs.r_mat * z.transpose()
        + &coeffs.r_mat * drift.transpose();
    let term_linear = coeffs.control_sections.star(&w)?.dot(u);

    let a_tilde = coeffs.control_sections.dot(u)?;
    let w2 = &coeffs.r_mat * z.transpose() * a_tilde.transpose();
    let term_quadratic = coeffs.control_sections.star(&w2)?.dot(u);

    let g = coeffs.control_gradient(z)?;
    Ok(term_const + term_linear + term_quadratic + g.dot(udot))
}

/// Integrates the auxiliary ODE with fixed-step RK4, sampling state,
/// control, deviation and the running quadratic penalty at every node.
/// Closed-loop laws are evaluated at the stage times with the stage state;
/// the penalty integral rides along as an augmented scalar so that it is
/// integrated at the same order as the state.
pub fn simulate(
    coeffs: &Coefficients,
    control: &ControlSignal,
    penalty: Option<&PenaltyWeights>,
    tau: f64,
    dt: f64,
) -> Result<Trajectory> {
    let (traj, failure) = simulate_partial(coeffs, control, penalty, tau, dt)?;
    match failure {
        None => Ok(traj),
        Some(e) => Err(e),
    }
}

/// As [`simulate`], but keeps whatever was integrated before a numeric
/// blow-up: the samples collected so far come back together with the
/// overflow diagnostic, so callers can persist the partial path.
pub fn simulate_partial(
    coeffs: &Coefficients,
    control: &ControlSignal,
    penalty: Option<&PenaltyWeights>,
    tau: f64,
    dt: f64,
) -> Result<(Trajectory, Option<CoreError>)> {
    if !(tau > 0.0) {
        return Err(CoreError::InvalidArgument(format!("horizon must be positive, got {tau}")));
    }
    if control.dim() != coeffs.r {
        return Err(CoreError::DimensionMismatch(format!(
            "control has {} inputs, scenario expects {}",
            control.dim(),
            coeffs.r
        )));
    }
    control.validate_span(tau)?;

    let rhs = |t: f64, state: &(DMatrix<f64>, f64)| {
        let (z, _) = state;
        let u = control.eval(t, z);
        let a = &coeffs.a_star + coeffs.control_sections.dot(&u).expect("dims checked");
        let dz = a * z + &coeffs.c;
        let dpen = match penalty {
            Some(w) => 0.5 * w.quadratic(&u),
            None => 0.0,
        };
        (dz, dpen)
    };

    let mut traj = Trajectory {
        times: Vec::new(),
        z: Vec::new(),
        controls: Vec::new(),
        delta: Vec::new(),
        penalty: Vec::new(),
        phi: Vec::new(),
    };
    let outcome = rk4_path(&rhs, 0.0, tau, dt, (coeffs.z0.clone(), 0.0), |_, t, (z, pen)| {
        let delta = delta_of_z(coeffs, z);
        traj.times.push(t);
        traj.controls.push(control.eval(t, z));
        traj.z.push(z.clone());
        traj.delta.push(delta);
        traj.penalty.push(*pen);
        traj.phi.push(delta + *pen);
    });
    match outcome {
        Ok(_) => Ok((traj, None)),
        Err(e @ CoreError::NumericOverflow { .. }) => Ok((traj, Some(e))),
        Err(other) => Err(other),
    }
}

/// Independent deviation route through the moment machinery: integrates
/// the fundamental matrix G and its integral psi jointly, then forms
/// Q = (G - I) P + psi b mu0^T, mu = G mu0 + psi b and
/// Xi = gamma . (mu - mu0) - Q - Q^T, and contracts with the selection
/// Gram matrix. Only open-loop controls are meaningful here; sample a
/// closed-loop run first.
pub fn delta_via_moments(
    coeffs: &Coefficients,
    control: &ControlSignal,
    tau: f64,
    dt: f64,
) -> Result<MomentPath> {
    if matches!(control, ControlSignal::Law(_)) {
        return Err(CoreError::InvalidArgument(
            "moment route needs an open-loop control; sample the closed loop first".into(),
        ));
    }
    if control.dim() != coeffs.r {
        return Err(CoreError::DimensionMismatch(format!(
            "control has {} inputs, scenario expects {}",
            control.dim(),
            coeffs.r
        )));
    }
    control.validate_span(tau)?;
    let n = coeffs.n;
    let dummy = DMatrix::zeros(0, 0);

    // Joint state [G | psi], n x 2n: G' = A G, psi' = A psi + I.
    let mut y0 = DMatrix::zeros(n, 2 * n);
    y0.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
    let rhs = |t: f64, y: &DMatrix<f64>| {
        let u = control.eval(t, &dummy);
        let a = &coeffs.a_star + coeffs.control_sections.dot(&u).expect("dims checked");
        let mut dy = a * y;
        for i in 0..n {
            dy[(i, n + i)] += 1.0;
        }
        dy
    };

    let mut path = MomentPath {
        times: Vec::new(),
        delta: Vec::new(),
        mu: Vec::new(),
        second: Vec::new(),
        xi: Vec::new(),
    };
    let mut observe = |t: f64, y: &DMatrix<f64>| -> Result<()> {
        let g = y.view((0, 0), (n, n)).into_owned();
        let psi = y.view((0, n), (n, n)).into_owned();
        let psi_b = &psi * &coeffs.b;
        let q = (&g - DMatrix::identity(n, n)) * &coeffs.p0 + &psi_b * coeffs.mu0.transpose();
        let mu = &g * &coeffs.mu0 + &psi_b;
        let xi = coeffs.gamma.dot(&(&mu - &coeffs.mu0))? - &q - q.transpose();
        path.times.push(t);
        path.delta.push(frob(&coeffs.sigma_mat, &xi));
        path.mu.push(mu);
        path.second.push(&coeffs.p0 + &q);
        path.xi.push(xi);
        Ok(())
    };
    let mut observe_err: Option<CoreError> = None;
    rk4_path(&rhs, 0.0, tau, dt, y0, |_, t, y| {
        if observe_err.is_none() {
            if let Err(e) = observe(t, y) {
                observe_err = Some(e);
            }
        }
    })?;
    if let Some(e) = observe_err {
        return Err(e);
    }
    Ok(path)
}
