//! Matrix exponentials and fixed-step fourth-order Runge-Kutta propagation.
//!
//! One integrator serves every ODE in the crate: deterministic fixed-step
//! RK4, no adaptivity, no event handling. The matrix exponential is
//! scaling-and-squaring with a degree-6 Pade approximant; the exponential
//! integral is obtained from an augmented block exponential so that no
//! invertibility assumption is needed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::CoreError;
use crate::Result;

/// State that can enter the generic RK4 stepper.
pub trait OdeState: Clone {
    /// In-place `self += a * rhs`.
    fn add_scaled(&mut self, a: f64, rhs: &Self);
    fn is_finite_state(&self) -> bool;
}

impl OdeState for f64 {
    fn add_scaled(&mut self, a: f64, rhs: &Self) {
        *self += a * rhs;
    }
    fn is_finite_state(&self) -> bool {
        self.is_finite()
    }
}

impl OdeState for DMatrix<f64> {
    fn add_scaled(&mut self, a: f64, rhs: &Self) {
        self.zip_apply(rhs, |x, r| *x += a * r);
    }
    fn is_finite_state(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl OdeState for DVector<f64> {
    fn add_scaled(&mut self, a: f64, rhs: &Self) {
        self.zip_apply(rhs, |x, r| *x += a * r);
    }
    fn is_finite_state(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl OdeState for DMatrix<Complex64> {
    fn add_scaled(&mut self, a: f64, rhs: &Self) {
        self.zip_apply(rhs, |x, r| *x += a * r);
    }
    fn is_finite_state(&self) -> bool {
        self.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

impl<A: OdeState, B: OdeState> OdeState for (A, B) {
    fn add_scaled(&mut self, a: f64, rhs: &Self) {
        self.0.add_scaled(a, &rhs.0);
        self.1.add_scaled(a, &rhs.1);
    }
    fn is_finite_state(&self) -> bool {
        self.0.is_finite_state() && self.1.is_finite_state()
    }
}

impl<S: OdeState> OdeState for Vec<S> {
    fn add_scaled(&mut self, a: f64, rhs: &Self) {
        for (x, r) in self.iter_mut().zip(rhs) {
            x.add_scaled(a, r);
        }
    }
    fn is_finite_state(&self) -> bool {
        self.iter().all(|s| s.is_finite_state())
    }
}

/// One classical RK4 step of size `h` for `y' = f(t, y)`.
pub fn rk4_step<S, F>(f: &F, t: f64, y: &S, h: f64) -> S
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
{
    let k1 = f(t, y);
    let mut y2 = y.clone();
    y2.add_scaled(h / 2.0, &k1);
    let k2 = f(t + h / 2.0, &y2);
    let mut y3 = y.clone();
    y3.add_scaled(h / 2.0, &k2);
    let k3 = f(t + h / 2.0, &y3);
    let mut y4 = y.clone();
    y4.add_scaled(h, &k3);
    let k4 = f(t + h, &y4);

    let mut out = y.clone();
    out.add_scaled(h / 6.0, &k1);
    out.add_scaled(h / 3.0, &k2);
    out.add_scaled(h / 3.0, &k3);
    out.add_scaled(h / 6.0, &k4);
    out
}

/// Uniform grid over [t0, t1] with nominal step `dt`. The step count is
/// rounded so the grid lands on t1 exactly; callers get the actual step.
pub fn uniform_grid(t0: f64, t1: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CoreError::InvalidArgument(format!("step must be positive, got {dt}")));
    }
    let span = t1 - t0;
    if span < 0.0 {
        return Err(CoreError::InvalidArgument(format!(
            "time interval is reversed: [{t0}, {t1}]"
        )));
    }
    if span == 0.0 {
        return Ok((0, dt));
    }
    let steps = (span / dt).round().max(1.0) as usize;
    Ok((steps, span / steps as f64))
}

/// Integrates `y' = f(t, y)` from t0 to t1 with fixed-step RK4, invoking
/// `observer(step_index, t, y)` at t0 and after every step. Errors with the
/// blow-up time on the first non-finite state.
pub fn rk4_path<S, F, O>(f: &F, t0: f64, t1: f64, dt: f64, y0: S, mut observer: O) -> Result<S>
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
    O: FnMut(usize, f64, &S),
{
    let (steps, h) = uniform_grid(t0, t1, dt)?;
    let mut y = y0;
    observer(0, t0, &y);
    for i in 0..steps {
        let t = t0 + h * i as f64;
        y = rk4_step(f, t, &y, h);
        if !y.is_finite_state() {
            return Err(CoreError::NumericOverflow { t: t + h });
        }
        observer(i + 1, t + h, &y);
    }
    Ok(y)
}

/// Classical RK4 solution of the matrix ODE `Y' = A(t) Y` from t0 to t1.
/// With `y0 = I` this yields the fundamental matrix G(t1, t0).
pub fn propagate_linear<F>(
    a_of_t: &F,
    y0: &DMatrix<f64>,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<DMatrix<f64>>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    let f = |t: f64, y: &DMatrix<f64>| a_of_t(t) * y;
    rk4_path(&f, t0, t1, dt, y0.clone(), |_, _, _| {})
}

const PADE6: [f64; 7] = [
    1.0,
    1.0 / 2.0,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15_840.0,
    1.0 / 665_280.0,
];

fn one_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling-and-squaring with a degree-6 Pade
/// approximant. Sized for the small dense matrices this crate works with.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols(), "expm requires a square matrix");
    let n = a.nrows();
    let norm = one_norm(a);
    let scaling = if norm > 0.25 { (norm / 0.25).log2().ceil().max(0.0) as u32 } else { 0 };
    let scaled = a / 2f64.powi(scaling as i32);

    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let even = DMatrix::identity(n, n) * PADE6[0] + &a2 * PADE6[2] + &a4 * PADE6[4] + &a6 * PADE6[6];
    let odd_poly =
        DMatrix::identity(n, n) * PADE6[1] + &a2 * PADE6[3] + &a4 * PADE6[5];
    let odd = &scaled * odd_poly;

    let numer = &even + &odd;
    let denom = &even - &odd;
    let mut result = denom
        .lu()
        .solve(&numer)
        .expect("Pade denominator is well conditioned after scaling");
    for _ in 0..scaling {
        result = &result * &result;
    }
    result
}

/// Returns `(e^{T A}, int_0^T e^{s A} ds)`. The integral comes from the
/// augmented block exponential of [[A, I], [0, 0]], so A need not be
/// invertible; when it is, the result equals (e^{TA} - I) A^{-1}.
pub fn expm_and_integral(a: &DMatrix<f64>, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if t < 0.0 || !t.is_finite() {
        return Err(CoreError::InvalidArgument(format!(
            "duration must be finite and nonnegative, got {t}"
        )));
    }
    let n = a.nrows();
    if a.ncols() != n {
        return Err(CoreError::DimensionMismatch("expm_and_integral needs a square matrix".into()));
    }
    let mut block = DMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(a * t));
    block.view_mut((0, n), (n, n)).copy_from(&(DMatrix::identity(n, n) * t));
    let big = expm(&block);
    let exp_ta = big.view((0, 0), (n, n)).into_owned();
    let integral = big.view((0, n), (n, n)).into_owned();
    Ok((exp_ta, integral))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng, n: usize, scale: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..scale))
    }

    #[test]
    fn expm_zero_is_identity() {
        let z = DMatrix::zeros(4, 4);
        assert_eq!(expm(&z), DMatrix::identity(4, 4));
    }

    #[test]
    fn expm_scalar_case() {
        let a = DMatrix::from_element(1, 1, 1.0);
        assert_abs_diff_eq!(expm(&a)[(0, 0)], std::f64::consts::E, epsilon = 1e-14);
    }

    #[test]
    fn expm_rotation_block() {
        // exp(tJ) = I cos t + J sin t for J = [[0, 1], [-1, 0]].
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let t = 0.7;
        let e = expm(&(j * t));
        assert_abs_diff_eq!(e[(0, 0)], t.cos(), epsilon = 1e-13);
        assert_abs_diff_eq!(e[(0, 1)], t.sin(), epsilon = 1e-13);
        assert_abs_diff_eq!(e[(1, 0)], -t.sin(), epsilon = 1e-13);
        assert_abs_diff_eq!(e[(1, 1)], t.cos(), epsilon = 1e-13);
    }

    #[test]
    fn expm_and_integral_zero_matrix() {
        let (e, i) = expm_and_integral(&DMatrix::zeros(3, 3), 2.5).unwrap();
        assert_eq!(e, DMatrix::identity(3, 3));
        assert_abs_diff_eq!(i[(0, 0)], 2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(i[(1, 1)], 2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(i[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn expm_and_integral_scalar_identity() {
        let a = DMatrix::from_element(1, 1, 1.0);
        let (e, i) = expm_and_integral(&a, 1.0).unwrap();
        assert_abs_diff_eq!(e[(0, 0)], std::f64::consts::E, epsilon = 1e-13);
        assert_abs_diff_eq!(i[(0, 0)], std::f64::consts::E - 1.0, epsilon = 1e-13);
    }

    #[test]
    fn expm_and_integral_matches_inverse_formula() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 4, 1.5);
            // Shift away from singularity.
            let a = a + DMatrix::identity(4, 4) * 0.3;
            let t = 0.9;
            let (e, integral) = expm_and_integral(&a, t).unwrap();
            let explicit = (e.clone() - DMatrix::identity(4, 4))
                * a.clone().lu().try_inverse().expect("invertible");
            let err = (&integral - &explicit).amax();
            assert!(err <= 1e-10, "integral mismatch {err:.3e}");
        }
    }

    #[test]
    fn integral_derivative_matches_exponential() {
        // d/dT of the integral is e^{TA}: finite-difference check.
        let mut rng = StdRng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 3, 1.0);
        let t = 0.8;
        let h = 1e-5;
        let (e, _) = expm_and_integral(&a, t).unwrap();
        let (_, ip) = expm_and_integral(&a, t + h).unwrap();
        let (_, im) = expm_and_integral(&a, t - h).unwrap();
        let fd = (ip - im) / (2.0 * h);
        let rel = (&fd - &e).amax() / e.amax();
        assert!(rel <= 1e-6, "relative error {rel:.3e}");
    }

    #[test]
    fn propagate_constant_matches_expm() {
        let mut rng = StdRng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 3, 1.0);
        let a_fn = {
            let a = a.clone();
            move |_t: f64| a.clone()
        };
        let g = propagate_linear(&a_fn, &DMatrix::identity(3, 3), 0.0, 1.0, 5e-4).unwrap();
        let e = expm(&a);
        let err = (&g - &e).amax();
        assert!(err <= 1e-8, "RK4 vs expm error {err:.3e}");
    }

    #[test]
    fn propagate_zero_returns_initial() {
        let y0 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let a_fn = |_t: f64| DMatrix::zeros(2, 2);
        let g = propagate_linear(&a_fn, &y0, 0.0, 1.0, 1e-2).unwrap();
        assert_eq!(g, y0);
        // Degenerate interval returns the initial matrix untouched.
        let same = propagate_linear(&a_fn, &y0, 0.5, 0.5, 1e-2).unwrap();
        assert_eq!(same, y0);
    }

    #[test]
    fn propagate_commuting_time_dependence() {
        // A(t) = a(t) B with scalar a: solution is exp(int a dt B).
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let a_fn = {
            let b = b.clone();
            move |t: f64| b.clone() * (2.0 * t)
        };
        let g = propagate_linear(&a_fn, &DMatrix::identity(2, 2), 0.0, 1.0, 5e-4).unwrap();
        // int_0^1 2t dt = 1.
        let e = expm(&b);
        let err = (&g - &e).amax();
        assert!(err <= 1e-9, "commuting family error {err:.3e}");
    }

    #[test]
    fn propagator_cocycle() {
        let mut rng = StdRng::seed_from_u64(19);
        let b0 = random_matrix(&mut rng, 3, 0.8);
        let b1 = random_matrix(&mut rng, 3, 0.8);
        let a_fn = {
            let (b0, b1) = (b0.clone(), b1.clone());
            move |t: f64| &b0 + &b1 * t.sin()
        };
        let dt = 1e-3;
        let eye = DMatrix::identity(3, 3);
        let g_sr = propagate_linear(&a_fn, &eye, 0.2, 0.6, dt).unwrap();
        let g_ts = propagate_linear(&a_fn, &eye, 0.6, 1.0, dt).unwrap();
        let g_tr = propagate_linear(&a_fn, &eye, 0.2, 1.0, dt).unwrap();
        let err = (&g_ts * &g_sr - &g_tr).amax();
        assert!(err <= 1e-9, "cocycle defect {err:.3e}");
    }

    #[test]
    fn blow_up_is_reported_with_time() {
        // y' = y^2 from y(0)=1 blows up at t=1.
        let f = |_t: f64, y: &f64| y * y;
        let res = rk4_path(&f, 0.0, 2.0, 1e-3, 1.0f64, |_, _, _| {});
        match res {
            Err(CoreError::NumericOverflow { t }) => assert!(t > 0.9 && t < 1.2),
            other => panic!("expected overflow, got {other:?}"),
        }
    }
}
