//! Seeded random scenarios for validation sweeps.
//!
//! Admissible initial means are produced by construction: a random density
//! matrix is drawn first and the mean vector is read off it, so no
//! rejection loop is needed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::control::SampledControl;
use crate::pauli::pauli_basis;
use crate::system::{InitialState, SystemSpec};
use crate::Result;

/// Deterministic generator for a given seed.
pub fn rng_from_seed(seed: u64) -> ChaCha12Rng {
    use rand::SeedableRng;
    ChaCha12Rng::seed_from_u64(seed)
}

/// Random density matrix rho = G G* / Tr(G G*), full rank almost surely.
pub fn random_density(rng: &mut ChaCha12Rng, dim: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let gg = &g * g.adjoint();
    let trace = gg.trace().re;
    gg / Complex64::new(trace, 0.0)
}

/// Random scenario on a q-qubit register: random energy vector, coupling
/// matrices, offsets, a full selection matrix and a random admissible
/// initial state.
pub fn random_scenario(rng: &mut ChaCha12Rng, qubits: usize) -> Result<SystemSpec> {
    let basis = pauli_basis(qubits)?;
    let n = basis.len();
    let m = if rng.random_bool(0.5) { 2 } else { 4 };
    let r = rng.random_range(1..=3);

    let e_star = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let k_ctrl = DMatrix::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0));
    let m_coupling = DMatrix::from_fn(m, n, |_, _| rng.random_range(-0.7..0.7));
    let n_offset = DVector::from_fn(m, |_, _| rng.random_range(-0.5..0.5));
    let f_select = DMatrix::identity(n, n);
    let rho0 = random_density(rng, basis.dim);

    SystemSpec::new(
        basis,
        e_star,
        k_ctrl,
        m_coupling,
        n_offset,
        f_select,
        InitialState::Density(rho0),
    )
}

/// Random constant control vector with entries in [-1, 1].
pub fn random_constant_control(rng: &mut ChaCha12Rng, r: usize) -> DVector<f64> {
    DVector::from_fn(r, |_, _| rng.random_range(-1.0..1.0))
}

/// Random n×(n+1) state perturbation with entries in [-scale, scale].
pub fn random_state_perturbation(rng: &mut ChaCha12Rng, n: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n + 1, |_, _| rng.random_range(-scale..scale))
}

/// Smooth random open-loop control: a short random Fourier sum per channel.
pub fn random_smooth_control(
    rng: &mut ChaCha12Rng,
    r: usize,
    tau: f64,
    nodes: usize,
) -> Result<SampledControl> {
    let mut coeffs = Vec::with_capacity(r);
    for _ in 0..r {
        let a: [f64; 3] = [
            rng.random_range(-0.8..0.8),
            rng.random_range(-0.8..0.8),
            rng.random_range(-0.8..0.8),
        ];
        let w: [f64; 3] = [
            rng.random_range(0.5..4.0),
            rng.random_range(0.5..4.0),
            rng.random_range(0.5..4.0),
        ];
        coeffs.push((a, w));
    }
    SampledControl::from_fn(0.0, tau, nodes, r, move |t| {
        DVector::from_fn(r, |k, _| {
            let (a, w) = &coeffs[k];
            a[0] * (w[0] * t).sin() + a[1] * (w[1] * t).cos() + a[2] * (w[2] * t).sin()
        })
    })
}
