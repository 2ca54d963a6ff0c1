//! Randomized cross-checks between the algebraic assembly, the auxiliary
//! reduction and the generator oracle.

use nalgebra::DVector;
use qmem_core::aux_system::{delta_via_moments, eval_fg, simulate};
use qmem_core::coefficients::Coefficients;
use qmem_core::control::ControlSignal;
use qmem_core::oracle;
use qmem_core::pointwise::{simulate_pointwise, PenaltyWeights};
use qmem_core::sampling;
use qmem_core::tol;

fn sup_mismatch(a: &[f64], b: &[f64]) -> f64 {
    let peak = a.iter().cloned().fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / (1.0 + peak)
}

#[test]
fn random_scenarios_pass_generator_checks() {
    let mut rng = sampling::rng_from_seed(2024);
    for i in 0..12 {
        let q = 1 + (i % 2);
        let spec = sampling::random_scenario(&mut rng, q).unwrap();
        let coeffs = Coefficients::derive(&spec).unwrap();
        let u = sampling::random_constant_control(&mut rng, spec.controls());

        let drift = oracle::drift_check(&spec, &coeffs, &u).unwrap();
        assert!(drift <= tol::DRIFT_ORACLE, "scenario {i} (q={q}): drift error {drift:.3e}");
        let diffusion = oracle::diffusion_check(&spec, &coeffs).unwrap();
        assert!(diffusion <= tol::STRUCTURAL, "scenario {i} (q={q}): diffusion {diffusion:.3e}");
    }
}

#[test]
fn random_scenarios_have_vanishing_initial_gradient() {
    let mut rng = sampling::rng_from_seed(77);
    for i in 0..20 {
        let q = 1 + (i % 2);
        let spec = sampling::random_scenario(&mut rng, q).unwrap();
        let coeffs = Coefficients::derive(&spec).unwrap();
        let (f0, g0) = eval_fg(&coeffs, &coeffs.z0).unwrap();
        assert!(g0.amax() <= tol::DRIFT_ORACLE, "scenario {i}: g(z0) = {:.3e}", g0.amax());
        assert!(f0 >= -tol::DRIFT_ORACLE, "scenario {i}: f(z0) = {f0:.3e}");
    }
}

#[test]
fn deviation_routes_agree_on_random_scenarios() {
    let mut rng = sampling::rng_from_seed(4096);
    let tau = 1.0;
    let dt = 5e-4;
    for i in 0..4 {
        let q = 1 + (i % 2);
        let spec = sampling::random_scenario(&mut rng, q).unwrap();
        let coeffs = Coefficients::derive(&spec).unwrap();
        let r = spec.controls();

        let zero = ControlSignal::Zero { dim: r };
        let t_zero = simulate(&coeffs, &zero, None, tau, dt).unwrap();
        let m_zero = delta_via_moments(&coeffs, &zero, tau, dt).unwrap();
        let gap = sup_mismatch(&t_zero.delta, &m_zero.delta);
        assert!(gap <= tol::ODE_CROSS_CHECK, "scenario {i} zero-control gap {gap:.3e}");

        let sampled = sampling::random_smooth_control(&mut rng, r, tau, 400).unwrap();
        let sig = ControlSignal::Sampled(&sampled);
        let t_s = simulate(&coeffs, &sig, None, tau, dt).unwrap();
        let m_s = delta_via_moments(&coeffs, &sig, tau, dt).unwrap();
        let gap = sup_mismatch(&t_s.delta, &m_s.delta);
        assert!(gap <= tol::ODE_CROSS_CHECK, "scenario {i} sampled-control gap {gap:.3e}");

        for traj in [&t_zero, &t_s] {
            assert_eq!(traj.delta[0], 0.0);
            for &d in &traj.delta {
                assert!(d >= -tol::NONNEGATIVITY_SLACK, "scenario {i}: Delta = {d:.3e}");
            }
        }
    }
}

#[test]
fn pointwise_control_replays_through_the_moment_route() {
    let mut rng = sampling::rng_from_seed(31);
    let tau = 1.0;
    let dt = 5e-4;
    let spec = sampling::random_scenario(&mut rng, 1).unwrap();
    let coeffs = Coefficients::derive(&spec).unwrap();
    let weights = PenaltyWeights::new(nalgebra::DMatrix::identity(spec.controls(), spec.controls())).unwrap();

    let closed = simulate_pointwise(&coeffs, &weights, tau, dt).unwrap();
    // Node-sampled realization of the closed-loop signal, fed to both
    // open-loop routes.
    let sampled = closed.traj.control_as_sampled().unwrap();
    let sig = ControlSignal::Sampled(&sampled);
    let replay = simulate(&coeffs, &sig, None, tau, dt).unwrap();
    let moment = delta_via_moments(&coeffs, &sig, tau, dt).unwrap();

    let gap = sup_mismatch(&replay.delta, &moment.delta);
    assert!(gap <= tol::ODE_CROSS_CHECK, "replayed pointwise gap {gap:.3e}");

    // The replay differs from the closed loop only by the interpolation of
    // the sampled signal.
    let loop_gap = sup_mismatch(&closed.traj.delta, &replay.delta);
    assert!(loop_gap <= 1e-4, "closed-loop vs replay gap {loop_gap:.3e}");
}

#[test]
fn oracle_moment_paths_match_reduction_on_random_scenarios() {
    let mut rng = sampling::rng_from_seed(555);
    let tau = 1.0;
    let dt = 1e-3;
    for i in 0..2 {
        let q = 1 + i;
        let spec = sampling::random_scenario(&mut rng, q).unwrap();
        let coeffs = Coefficients::derive(&spec).unwrap();
        let r = spec.controls();
        let control = sampling::random_smooth_control(&mut rng, r, tau, 200).unwrap();
        let rho0 = spec.rho0.clone().expect("random scenarios carry a density");

        let traj = simulate(&coeffs, &ControlSignal::Sampled(&control), None, tau, dt).unwrap();
        let density =
            oracle::propagate_density(&spec, &|t| control.eval(t), &rho0, tau, dt).unwrap();
        let mut worst: f64 = 0.0;
        for (z, mu) in traj.z.iter().zip(&density.mu) {
            for j in 0..spec.n() {
                worst = worst.max((z[(j, 0)] - mu[j]).abs());
            }
        }
        assert!(worst <= tol::ODE_CROSS_CHECK, "q={q}: mean-path gap {worst:.3e}");

        let reg =
            oracle::regression_two_point(&spec, &|t| control.eval(t), &rho0, tau, dt).unwrap();
        let moments =
            delta_via_moments(&coeffs, &ControlSignal::Sampled(&control), tau, dt).unwrap();
        let mut worst2: f64 = 0.0;
        for (a, b) in reg.second.iter().zip(&moments.second) {
            worst2 = worst2.max((a - b).amax());
        }
        assert!(worst2 <= tol::ODE_CROSS_CHECK, "q={q}: two-point gap {worst2:.3e}");
    }
}
