//! Command implementations behind the CLI dispatch.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use qmem_core::aux_system::{delta_via_moments, eval_fg, simulate, simulate_partial, Trajectory};
use qmem_core::coefficients::{frob, Coefficients};
use qmem_core::control::{ControlSignal, SampledControl};
use qmem_core::oracle;
use qmem_core::pointwise::{simulate_pointwise, PointwiseLaw};
use qmem_core::sampling;
use qmem_core::structure::check_admissible;
use qmem_core::system::SystemSpec;
use qmem_core::{tol, CoreError, ValueExpansion};

use crate::config::{ControlChoice, Scenario};
use crate::csvfmt::{fmt_f64, table_to_csv};
use crate::error::CliError;

/// One named validation check.
#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: String,
    pub max_err: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckRow {
    fn upper(name: &str, max_err: f64, tol: f64) -> Self {
        Self { name: name.into(), max_err, tol, pass: max_err <= tol }
    }
}

/// Table of named checks; commands exit nonzero unless all pass.
#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub rows: Vec<CheckRow>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<24} {:>14} {:>10} {:>6}", "check", "max error", "tol", "pass");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<24} {:>14.3e} {:>10.1e} {:>6}",
                r.name,
                r.max_err,
                r.tol,
                if r.pass { "ok" } else { "FAIL" }
            );
        }
        out
    }

    pub fn failed_names(&self) -> Vec<&str> {
        self.rows.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect()
    }
}

fn closure_residual(spec: &SystemSpec) -> f64 {
    let d = spec.basis.dim;
    let n = spec.n();
    let eye = DMatrix::<Complex64>::identity(d, d);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let product = &spec.basis.matrices[j] * &spec.basis.matrices[k];
            let mut recon = &eye * Complex64::new(spec.sc.alpha[(j, k)], 0.0);
            for l in 0..n {
                recon += &spec.basis.matrices[l] * spec.sc.beta.get(j, k, l);
            }
            worst = worst.max((&product - &recon).camax());
        }
    }
    worst
}

fn ccr_residual(spec: &SystemSpec) -> f64 {
    let d = spec.basis.dim;
    let n = spec.n();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let comm = &spec.basis.matrices[j] * &spec.basis.matrices[k]
                - &spec.basis.matrices[k] * &spec.basis.matrices[j];
            let mut rhs = DMatrix::<Complex64>::zeros(d, d);
            for l in 0..n {
                rhs += &spec.basis.matrices[l]
                    * Complex64::new(0.0, 2.0 * spec.sc.theta.get(j, k, l));
            }
            worst = worst.max((&comm - &rhs).camax());
        }
    }
    worst
}

fn anticommutator_residual(spec: &SystemSpec) -> f64 {
    let d = spec.basis.dim;
    let n = spec.n();
    let eye = DMatrix::<Complex64>::identity(d, d);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let anti = (&spec.basis.matrices[j] * &spec.basis.matrices[k]
                + &spec.basis.matrices[k] * &spec.basis.matrices[j])
                * Complex64::new(0.5, 0.0);
            let mut rhs = &eye * Complex64::new(spec.sc.alpha[(j, k)], 0.0);
            for l in 0..n {
                rhs += &spec.basis.matrices[l] * Complex64::new(spec.sc.gamma.get(j, k, l), 0.0);
            }
            worst = worst.max((&anti - &rhs).camax());
        }
    }
    worst
}

/// Runs the structural, admissibility and oracle checks and reports each by
/// name. Physical violations surface as failed rows, not hard errors.
pub fn cmd_validate(scenario: &Scenario) -> Result<CheckReport, CliError> {
    let mut report = CheckReport::default();

    // Selection rank does not need the full system.
    let nu = scenario.f_select.nrows();
    let svd = scenario.f_select.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > smax * 1e-10).count();
    report.rows.push(CheckRow {
        name: "selection-rank".into(),
        max_err: (nu as f64) - (rank as f64),
        tol: 0.0,
        pass: rank == nu,
    });

    // Admissibility from the raw mean vector (or the supplied density).
    let sc = qmem_core::structure::derive_structure(&scenario.basis)?;
    let mu0 = match (&scenario.mu0, &scenario.rho0) {
        (Some(mu), _) => mu.clone(),
        (None, Some(rho)) => qmem_core::structure::mean_from_state(&scenario.basis, rho)?,
        (None, None) => unreachable!("config resolution guarantees an initial state"),
    };
    let adm = check_admissible(&sc, &mu0)?;
    report.rows.push(CheckRow {
        name: "state-admissibility".into(),
        max_err: (-adm.min_eigenvalue).max(0.0),
        tol: -tol::ADMISSIBILITY,
        pass: adm.admissible,
    });

    if !report.all_pass() {
        return Ok(report);
    }

    let spec = scenario.system()?;
    let coeffs = Coefficients::derive(&spec)?;

    report.rows.push(CheckRow::upper("closure", closure_residual(&spec), tol::STRUCTURAL));
    report.rows.push(CheckRow::upper("ccr", ccr_residual(&spec), tol::STRUCTURAL));
    report.rows.push(CheckRow::upper(
        "anticommutator",
        anticommutator_residual(&spec),
        tol::STRUCTURAL,
    ));

    let (f0, g0) = eval_fg(&coeffs, &coeffs.z0)?;
    report.rows.push(CheckRow::upper("gradient-at-start", g0.amax(), tol::DRIFT_ORACLE));
    report.rows.push(CheckRow::upper("initial-descent", (-f0).max(0.0), tol::DRIFT_ORACLE));
    report.rows.push(CheckRow::upper(
        "offset-identity",
        (coeffs.d + frob(&coeffs.r_mat, &coeffs.z0)).abs(),
        tol::STRUCTURAL * (1.0 + coeffs.d.abs()),
    ));

    let mut rng = sampling::rng_from_seed(scenario.seed);
    let u_random = sampling::random_constant_control(&mut rng, spec.controls());
    let drift_zero = oracle::drift_check(&spec, &coeffs, &DVector::zeros(spec.controls()))?;
    let drift_rand = oracle::drift_check(&spec, &coeffs, &u_random)?;
    report.rows.push(CheckRow::upper(
        "oracle-drift",
        drift_zero.max(drift_rand),
        tol::DRIFT_ORACLE,
    ));
    report.rows.push(CheckRow::upper(
        "oracle-diffusion",
        oracle::diffusion_check(&spec, &coeffs)?,
        tol::STRUCTURAL,
    ));

    Ok(report)
}

/// Summary of one simulation run.
#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub csv_path: PathBuf,
    pub samples: usize,
    pub delta_tau: f64,
    pub penalty: f64,
    pub phi: f64,
    /// Set when the run blew up and only a prefix was written.
    pub failure: Option<String>,
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

fn trajectory_csv(traj: &Trajectory, r: usize, include_z: bool, n: usize) -> String {
    let mut header: Vec<String> = vec!["t".into(), "Delta".into(), "penalty".into(), "Phi".into()];
    for k in 0..r {
        header.push(format!("U_{}", k + 1));
    }
    if include_z {
        for i in 0..n {
            for j in 0..n + 1 {
                header.push(format!("z_{}_{}", i + 1, j + 1));
            }
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "{}", header.join(","));
    for idx in 0..traj.len() {
        let mut cells: Vec<String> = vec![
            fmt_f64(traj.times[idx]),
            fmt_f64(traj.delta[idx]),
            fmt_f64(traj.penalty[idx]),
            fmt_f64(traj.phi[idx]),
        ];
        for k in 0..r {
            cells.push(fmt_f64(traj.controls[idx][k]));
        }
        if include_z {
            let z = &traj.z[idx];
            for i in 0..n {
                for j in 0..n + 1 {
                    cells.push(fmt_f64(z[(i, j)]));
                }
            }
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Reads an open-loop control file: header `t,U_1..U_r`, one row per
/// uniform grid node.
pub fn read_control_file(path: &Path, r: usize) -> Result<SampledControl, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Validation(format!("control file {} is empty", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() != r + 1 || cols[0] != "t" {
        return Err(CliError::Validation(format!(
            "control file header must be t,U_1..U_{r}, got {header:?}"
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != r + 1 {
            return Err(CliError::Validation(format!(
                "control file line {}: {} cells, expected {}",
                lineno + 2,
                cells.len(),
                r + 1
            )));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse::<f64>().map_err(|_| {
                CliError::Validation(format!("control file line {}: bad number {s:?}", lineno + 2))
            })
        };
        times.push(parse(cells[0])?);
        let mut v = DVector::zeros(r);
        for (k, cell) in cells[1..].iter().enumerate() {
            v[k] = parse(cell)?;
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(CliError::Validation(format!(
                "control file line {}: non-finite control value",
                lineno + 2
            )));
        }
        values.push(v);
    }
    if times.len() < 2 {
        return Err(CliError::Validation("control file needs at least two rows".into()));
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * (1.0 + dt.abs()) {
            return Err(CliError::Validation("control file grid is not uniform".into()));
        }
    }
    Ok(SampledControl::new(times[0], dt, values)?)
}

/// Runs the configured control and writes `trajectory.csv`. A numeric
/// blow-up still writes the collected prefix, then surfaces as an error.
pub fn cmd_simulate(scenario: &Scenario) -> Result<SimulateSummary, CliError> {
    let spec = scenario.system()?;
    let coeffs = Coefficients::derive(&spec)?;
    let weights = scenario.penalty.weights()?;
    let tau = scenario.horizon;
    let dt = scenario.step;
    let r = spec.controls();

    let sampled_storage;
    let expansion_storage;
    let law_storage;
    let pw_law_storage;

    let (traj, failure): (Trajectory, Option<CoreError>) = match &scenario.control {
        ControlChoice::Zero => {
            simulate_partial(&coeffs, &ControlSignal::Zero { dim: r }, Some(&weights), tau, dt)?
        }
        ControlChoice::File(path) => {
            sampled_storage = read_control_file(path, r)?;
            simulate_partial(
                &coeffs,
                &ControlSignal::Sampled(&sampled_storage),
                Some(&weights),
                tau,
                dt,
            )?
        }
        ControlChoice::Pointwise => {
            pw_law_storage = PointwiseLaw { coeffs: &coeffs, weights: &weights };
            simulate_partial(
                &coeffs,
                &ControlSignal::Law(&pw_law_storage),
                Some(&weights),
                tau,
                dt,
            )?
        }
        ControlChoice::Hjb1 => {
            let (gamma, eps) = scenario.penalty.shape_scale().ok_or_else(|| {
                CliError::Validation(
                    "hjb1 control requires the penalty as {gamma, epsilon}".into(),
                )
            })?;
            let mut exp = ValueExpansion::new(gamma.clone(), eps, tau)?;
            exp.solve_psi1(&coeffs, dt)?;
            expansion_storage = exp;
            law_storage = expansion_storage.first_order_law(&coeffs, eps);
            simulate_partial(&coeffs, &ControlSignal::Law(&law_storage), Some(&weights), tau, dt)?
        }
    };

    ensure_dir(&scenario.output)?;
    let csv_path = scenario.output.join("trajectory.csv");
    let csv = trajectory_csv(&traj, r, scenario.include_z, spec.n());
    fs::write(&csv_path, csv).map_err(|e| CliError::io(csv_path.display(), e))?;

    let summary = SimulateSummary {
        csv_path,
        samples: traj.len(),
        delta_tau: traj.delta_final(),
        penalty: traj.penalty_final(),
        phi: traj.phi_final(),
        failure: failure.as_ref().map(|e| e.to_string()),
    };
    if let Some(e) = failure {
        return Err(CliError::Numeric(format!(
            "{e}; partial trajectory with {} samples written to {}",
            summary.samples,
            summary.csv_path.display()
        )));
    }
    log::info!(
        "simulate: {} samples, Delta(tau) = {:.6e}, Phi = {:.6e}",
        summary.samples,
        summary.delta_tau,
        summary.phi
    );
    Ok(summary)
}

/// One row of the control comparison.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub name: &'static str,
    pub delta_tau: f64,
    pub penalty: f64,
    pub phi: f64,
}

/// Cost comparison of the three controls under a shared penalty, plus the
/// expansion reference values.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub psi0_at_start: f64,
    pub psi1_at_start: f64,
    pub bellman_reference: f64,
    pub csv_path: PathBuf,
}

impl CompareReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>16} {:>16} {:>16}",
            "control", "Delta(tau)", "penalty", "Phi"
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<10} {:>16.9e} {:>16.9e} {:>16.9e}",
                row.name, row.delta_tau, row.penalty, row.phi
            );
        }
        let _ = writeln!(out, "Psi0(0,z0)                 = {:.9e}", self.psi0_at_start);
        let _ = writeln!(out, "Psi1(0,z0)                 = {:.9e}", self.psi1_at_start);
        let _ = writeln!(out, "(Psi0 + eps Psi1)(0,z0)    = {:.9e}", self.bellman_reference);
        out
    }
}

/// Runs zero, pointwise and first-order value-function controls under the
/// shared penalty Gamma / (2 eps) and writes `compare.csv`.
pub fn cmd_compare(scenario: &Scenario) -> Result<CompareReport, CliError> {
    let (gamma, eps) = scenario.penalty.shape_scale().ok_or_else(|| {
        CliError::Validation("compare requires the penalty as {gamma, epsilon}".into())
    })?;
    let spec = scenario.system()?;
    let coeffs = Coefficients::derive(&spec)?;
    let weights = scenario.penalty.weights()?;
    let tau = scenario.horizon;
    let dt = scenario.step;
    let r = spec.controls();

    let zero = simulate(&coeffs, &ControlSignal::Zero { dim: r }, Some(&weights), tau, dt)?;
    let pointwise = simulate_pointwise(&coeffs, &weights, tau, dt)?;
    let mut exp = ValueExpansion::new(gamma.clone(), eps, tau)?;
    exp.solve_psi1(&coeffs, dt)?;
    let hjb = exp.simulate_hjb(&coeffs, eps, dt)?;
    let (psi0_at_start, _) = exp.psi0(&coeffs, 0.0, &coeffs.z0)?;
    let (psi1_at_start, _) = exp.psi1(&coeffs, 0.0, &coeffs.z0)?;

    let rows = vec![
        CompareRow {
            name: "zero",
            delta_tau: zero.delta_final(),
            penalty: zero.penalty_final(),
            phi: zero.phi_final(),
        },
        CompareRow {
            name: "pointwise",
            delta_tau: pointwise.traj.delta_final(),
            penalty: pointwise.traj.penalty_final(),
            phi: pointwise.traj.phi_final(),
        },
        CompareRow {
            name: "hjb1",
            delta_tau: hjb.delta_tau,
            penalty: hjb.penalty,
            phi: hjb.phi,
        },
    ];

    ensure_dir(&scenario.output)?;
    let csv_path = scenario.output.join("compare.csv");
    let mut csv = String::from("control,Delta_tau,penalty,Phi\n");
    for row in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            row.name,
            fmt_f64(row.delta_tau),
            fmt_f64(row.penalty),
            fmt_f64(row.phi)
        );
    }
    let _ = writeln!(csv, "ref_psi0,{},,", fmt_f64(psi0_at_start));
    let _ = writeln!(csv, "ref_psi0_plus_eps_psi1,{},,", fmt_f64(psi0_at_start + eps * psi1_at_start));
    fs::write(&csv_path, csv).map_err(|e| CliError::io(csv_path.display(), e))?;

    Ok(CompareReport {
        rows,
        psi0_at_start,
        psi1_at_start,
        bellman_reference: psi0_at_start + eps * psi1_at_start,
        csv_path,
    })
}

/// Value-expansion diagnostics: expansion values at the initial state, the
/// residual scaling table and the Hamiltonian drift table.
#[derive(Debug, Clone)]
pub struct HjbReport {
    pub psi0_at_start: f64,
    pub psi1_at_start: f64,
    /// (t, residual at eps, residual at eps/2, ratio).
    pub residual_rows: Vec<(f64, f64, f64, f64)>,
    /// (eps, drift) pairs at eps and eps/2 plus the ratio.
    pub drift_full: f64,
    pub drift_half: f64,
    pub drift_ratio: f64,
    pub epsilon: f64,
    pub csv_path: PathBuf,
}

impl HjbReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Psi0(0,z0) = {:.9e}", self.psi0_at_start);
        let _ = writeln!(out, "Psi1(0,z0) = {:.9e}", self.psi1_at_start);
        let _ = writeln!(
            out,
            "{:<8} {:>14} {:>14} {:>8}",
            "t", "res(eps)", "res(eps/2)", "ratio"
        );
        for (t, a, b, ratio) in &self.residual_rows {
            let _ = writeln!(out, "{t:<8.3} {a:>14.4e} {b:>14.4e} {ratio:>8.3}");
        }
        let _ = writeln!(
            out,
            "Pontryagin drift: {:.4e} at eps={}, {:.4e} at eps/2, ratio {:.3}",
            self.drift_full, self.epsilon, self.drift_half, self.drift_ratio
        );
        out
    }
}

/// Solves the expansion, probes the equation residual at seeded interior
/// points for eps and eps/2, runs the closed loop at both scales and
/// writes `hjb.csv`.
pub fn cmd_hjb(scenario: &Scenario) -> Result<HjbReport, CliError> {
    let (gamma, eps) = scenario.penalty.shape_scale().ok_or_else(|| {
        CliError::Validation("hjb requires the penalty as {gamma, epsilon}".into())
    })?;
    let spec = scenario.system()?;
    let coeffs = Coefficients::derive(&spec)?;
    let tau = scenario.horizon;
    let dt = scenario.step;

    let mut exp = ValueExpansion::new(gamma.clone(), eps, tau)?;
    exp.solve_psi1(&coeffs, dt)?;
    let (psi0_at_start, _) = exp.psi0(&coeffs, 0.0, &coeffs.z0)?;
    let (psi1_at_start, _) = exp.psi1(&coeffs, 0.0, &coeffs.z0)?;

    let mut rng = sampling::rng_from_seed(scenario.seed);
    let mut residual_rows = Vec::new();
    for i in 0..4 {
        let t = tau * (0.2 + 0.2 * i as f64);
        let v = &coeffs.z0 + sampling::random_state_perturbation(&mut rng, coeffs.n, 0.2);
        let full = exp.hjb_residual(&coeffs, t, &v, eps)?;
        let half = exp.hjb_residual(&coeffs, t, &v, eps / 2.0)?;
        residual_rows.push((t, full.value, half.value, full.value / half.value));
    }

    let out_full = exp.simulate_hjb(&coeffs, eps, dt)?;
    let drift_full = exp.pontryagin_diagnostic(&coeffs, eps, &out_full.traj)?;
    let out_half = exp.simulate_hjb(&coeffs, eps / 2.0, dt)?;
    let drift_half = exp.pontryagin_diagnostic(&coeffs, eps / 2.0, &out_half.traj)?;

    ensure_dir(&scenario.output)?;
    let csv_path = scenario.output.join("hjb.csv");
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (t, a, b, ratio) in &residual_rows {
        rows.push(vec![*t, *a, *b, *ratio]);
    }
    let mut csv = String::new();
    let _ = writeln!(csv, "psi0_at_start,{}", fmt_f64(psi0_at_start));
    let _ = writeln!(csv, "psi1_at_start,{}", fmt_f64(psi1_at_start));
    csv.push_str(&table_to_csv(
        &["t", "residual_eps", "residual_half", "ratio"],
        &rows,
    ));
    let _ = writeln!(
        csv,
        "pontryagin_drift,{},{},{}",
        fmt_f64(drift_full),
        fmt_f64(drift_half),
        fmt_f64(drift_full / drift_half)
    );
    fs::write(&csv_path, csv).map_err(|e| CliError::io(csv_path.display(), e))?;

    Ok(HjbReport {
        psi0_at_start,
        psi1_at_start,
        residual_rows,
        drift_full,
        drift_half,
        drift_ratio: drift_full / drift_half,
        epsilon: eps,
        csv_path,
    })
}

/// Runs the generator-oracle checks: drift and diffusion coefficient
/// agreement, then mean and two-point moment paths against the auxiliary
/// reduction, all under a seeded open-loop control.
pub fn cmd_oracle(scenario: &Scenario) -> Result<CheckReport, CliError> {
    let spec = scenario.system()?;
    let coeffs = Coefficients::derive(&spec)?;
    let tau = scenario.horizon;
    let dt = scenario.step;
    let r = spec.controls();

    let mut report = CheckReport::default();
    let mut rng = sampling::rng_from_seed(scenario.seed);

    let drift_zero = oracle::drift_check(&spec, &coeffs, &DVector::zeros(r))?;
    let u_rand = sampling::random_constant_control(&mut rng, r);
    let drift_rand = oracle::drift_check(&spec, &coeffs, &u_rand)?;
    report.rows.push(CheckRow::upper("drift", drift_zero.max(drift_rand), tol::DRIFT_ORACLE));
    report.rows.push(CheckRow::upper(
        "diffusion",
        oracle::diffusion_check(&spec, &coeffs)?,
        tol::STRUCTURAL,
    ));

    let control = sampling::random_smooth_control(&mut rng, r, tau, 200)?;
    let signal = ControlSignal::Sampled(&control);
    let rho0 = scenario.density()?;

    let traj = simulate(&coeffs, &signal, None, tau, dt)?;
    let density = oracle::propagate_density(&spec, &|t| control.eval(t), &rho0, tau, dt)?;
    let mut mean_err: f64 = 0.0;
    for (z, mu) in traj.z.iter().zip(&density.mu) {
        for j in 0..spec.n() {
            mean_err = mean_err.max((z[(j, 0)] - mu[j]).abs());
        }
    }
    report.rows.push(CheckRow::upper("mean-path", mean_err, tol::ODE_CROSS_CHECK));

    let regression = oracle::regression_two_point(&spec, &|t| control.eval(t), &rho0, tau, dt)?;
    let moments = delta_via_moments(&coeffs, &signal, tau, dt)?;
    let mut second_err: f64 = 0.0;
    for (a, b) in regression.second.iter().zip(&moments.second) {
        second_err = second_err.max((a - b).amax());
    }
    report.rows.push(CheckRow::upper("two-point-path", second_err, tol::ODE_CROSS_CHECK));

    Ok(report)
}
