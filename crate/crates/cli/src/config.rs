//! JSON scenario configuration.
//!
//! Matrices are row-major nested arrays. A `preset` key expands to the
//! worked single-qubit example before field-by-field overrides apply, so a
//! config of just `{"preset": "single-qubit-demo"}` is complete. Parse
//! errors carry the offending field path.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qmem_core::pauli::{pauli_basis, MatrixBasis};
use qmem_core::system::{InitialState, SystemSpec};
use qmem_core::PenaltyWeights;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawInitialState {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho0: Option<RawComplexMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawComplexMatrix {
    pub re: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawPenalty {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// Scenario configuration as written on disk.
#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qubits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_star: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<RawInitialState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty: Option<RawPenalty>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub include_z: Option<bool>,
}

/// Requested control synthesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ControlChoice {
    Zero,
    Pointwise,
    Hjb1,
    File(PathBuf),
}

impl ControlChoice {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "zero" => Ok(Self::Zero),
            "pointwise" => Ok(Self::Pointwise),
            "hjb1" => Ok(Self::Hjb1),
            other => {
                if let Some(path) = other.strip_prefix("file:") {
                    if path.is_empty() {
                        return Err(CliError::config("control", "empty file path"));
                    }
                    Ok(Self::File(PathBuf::from(path)))
                } else {
                    Err(CliError::config(
                        "control",
                        format!("expected zero|pointwise|hjb1|file:<path>, got {other:?}"),
                    ))
                }
            }
        }
    }

    pub fn as_str(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Pointwise => "pointwise".into(),
            Self::Hjb1 => "hjb1".into(),
            Self::File(p) => format!("file:{}", p.display()),
        }
    }
}

/// Penalty given either directly or as a shape/scale pair.
#[derive(Debug, Clone)]
pub enum PenaltyChoice {
    Direct(DMatrix<f64>),
    ShapeScale { gamma: DMatrix<f64>, epsilon: f64 },
}

impl PenaltyChoice {
    pub fn weights(&self) -> Result<PenaltyWeights, CliError> {
        match self {
            Self::Direct(pi) => Ok(PenaltyWeights::new(pi.clone())?),
            Self::ShapeScale { gamma, epsilon } => {
                Ok(PenaltyWeights::from_shape_scale(gamma, *epsilon)?)
            }
        }
    }

    pub fn shape_scale(&self) -> Option<(&DMatrix<f64>, f64)> {
        match self {
            Self::ShapeScale { gamma, epsilon } => Some((gamma, *epsilon)),
            Self::Direct(_) => None,
        }
    }
}

/// Fully resolved scenario: validated numeric pieces plus run settings.
/// The system itself is constructed lazily so the validation command can
/// report named check failures instead of refusing to build.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub qubits: usize,
    pub basis: MatrixBasis,
    pub e_star: DVector<f64>,
    pub k_ctrl: DMatrix<f64>,
    pub m_coupling: DMatrix<f64>,
    pub n_offset: DVector<f64>,
    pub f_select: DMatrix<f64>,
    pub mu0: Option<DVector<f64>>,
    pub rho0: Option<DMatrix<Complex64>>,
    pub penalty: PenaltyChoice,
    pub horizon: f64,
    pub step: f64,
    pub control: ControlChoice,
    pub output: PathBuf,
    pub seed: u64,
    pub include_z: bool,
    canonical: RawConfig,
}

fn matrix_from_rows(field: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    if rows.is_empty() {
        return Err(CliError::config(field, "matrix has no rows"));
    }
    let cols = rows[0].len();
    if cols == 0 {
        return Err(CliError::config(field, "matrix has empty rows"));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(CliError::config(
                field,
                format!("row {i} has {} entries, expected {cols}", r.len()),
            ));
        }
        if !r.iter().all(|x| x.is_finite()) {
            return Err(CliError::config(field, format!("row {i} contains non-finite entries")));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn vector_from(field: &str, v: &[f64]) -> Result<DVector<f64>, CliError> {
    if !v.iter().all(|x| x.is_finite()) {
        return Err(CliError::config(field, "contains non-finite entries"));
    }
    Ok(DVector::from_row_slice(v))
}

fn complex_matrix_from(field: &str, raw: &RawComplexMatrix) -> Result<DMatrix<Complex64>, CliError> {
    let re = matrix_from_rows(&format!("{field}.re"), &raw.re)?;
    let im = match &raw.im {
        Some(rows) => Some(matrix_from_rows(&format!("{field}.im"), rows)?),
        None => None,
    };
    if let Some(im) = &im {
        if im.shape() != re.shape() {
            return Err(CliError::config(field, "re and im shapes differ"));
        }
    }
    Ok(DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| {
        Complex64::new(re[(i, j)], im.as_ref().map_or(0.0, |m| m[(i, j)]))
    }))
}

/// The worked single-qubit example.
pub fn single_qubit_demo() -> RawConfig {
    RawConfig {
        preset: None,
        qubits: Some(1),
        e_star: Some(vec![0.0, 0.0, 1.0]),
        k: Some(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]),
        m: Some(vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]),
        n: Some(vec![0.0, 0.0]),
        f: Some(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]),
        initial_state: Some(RawInitialState { mu0: Some(vec![0.0, 0.0, 1.0]), rho0: None }),
        penalty: Some(RawPenalty {
            pi: None,
            gamma: Some(vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ]),
            epsilon: Some(0.05),
        }),
        horizon: Some(1.0),
        step: Some(5e-4),
        control: Some("pointwise".into()),
        output: Some("out".into()),
        seed: Some(42),
        include_z: Some(false),
    }
}

/// Expands a `preset` key into concrete fields, keeping explicit fields.
pub fn apply_preset(raw: RawConfig) -> Result<RawConfig, CliError> {
    let Some(name) = raw.preset.clone() else {
        return Ok(raw);
    };
    let base = match name.as_str() {
        "single-qubit-demo" => single_qubit_demo(),
        other => {
            return Err(CliError::config("preset", format!("unknown preset {other:?}")));
        }
    };
    Ok(RawConfig {
        preset: None,
        qubits: raw.qubits.or(base.qubits),
        e_star: raw.e_star.or(base.e_star),
        k: raw.k.or(base.k),
        m: raw.m.or(base.m),
        n: raw.n.or(base.n),
        f: raw.f.or(base.f),
        initial_state: raw.initial_state.or(base.initial_state),
        penalty: raw.penalty.or(base.penalty),
        horizon: raw.horizon.or(base.horizon),
        step: raw.step.or(base.step),
        control: raw.control.or(base.control),
        output: raw.output.or(base.output),
        seed: raw.seed.or(base.seed),
        include_z: raw.include_z.or(base.include_z),
    })
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Config { field: "<root>".into(), message: e.to_string() })?;
        Self::resolve(raw)
    }

    pub fn resolve(raw: RawConfig) -> Result<Self, CliError> {
        let raw = apply_preset(raw)?;

        let qubits = raw.qubits.ok_or_else(|| CliError::config("qubits", "missing"))?;
        let basis = pauli_basis(qubits)?;
        let n = basis.len();

        let e_star = vector_from("e_star", raw.e_star.as_deref().unwrap_or(&vec![0.0; n]))?;
        if e_star.len() != n {
            return Err(CliError::config("e_star", format!("length {} != {n}", e_star.len())));
        }
        let k_rows = raw.k.as_ref().ok_or_else(|| CliError::config("k", "missing"))?;
        let k_ctrl = matrix_from_rows("k", k_rows)?;
        if k_ctrl.nrows() != n {
            return Err(CliError::config("k", format!("{} rows, expected {n}", k_ctrl.nrows())));
        }
        let m_rows = raw.m.as_ref().ok_or_else(|| CliError::config("m", "missing"))?;
        let m_coupling = matrix_from_rows("m", m_rows)?;
        if m_coupling.ncols() != n {
            return Err(CliError::config(
                "m",
                format!("{} columns, expected {n}", m_coupling.ncols()),
            ));
        }
        if m_coupling.nrows() == 0 || m_coupling.nrows() % 2 != 0 {
            return Err(CliError::config(
                "m",
                format!("channel count must be even and positive, got {}", m_coupling.nrows()),
            ));
        }
        let n_offset = vector_from(
            "n",
            raw.n.as_deref().unwrap_or(&vec![0.0; m_coupling.nrows()]),
        )?;
        if n_offset.len() != m_coupling.nrows() {
            return Err(CliError::config(
                "n",
                format!("length {} != channel count {}", n_offset.len(), m_coupling.nrows()),
            ));
        }
        let f_rows = raw.f.as_ref().ok_or_else(|| CliError::config("f", "missing"))?;
        let f_select = matrix_from_rows("f", f_rows)?;
        if f_select.ncols() != n {
            return Err(CliError::config(
                "f",
                format!("{} columns, expected {n}", f_select.ncols()),
            ));
        }

        let initial = raw
            .initial_state
            .as_ref()
            .ok_or_else(|| CliError::config("initial_state", "missing"))?;
        let mu0 = match &initial.mu0 {
            Some(v) => {
                let mu = vector_from("initial_state.mu0", v)?;
                if mu.len() != n {
                    return Err(CliError::config(
                        "initial_state.mu0",
                        format!("length {} != {n}", mu.len()),
                    ));
                }
                Some(mu)
            }
            None => None,
        };
        let rho0 = match &initial.rho0 {
            Some(rawm) => {
                let rho = complex_matrix_from("initial_state.rho0", rawm)?;
                if rho.nrows() != basis.dim || rho.ncols() != basis.dim {
                    return Err(CliError::config(
                        "initial_state.rho0",
                        format!("shape {}x{}, expected {0}x{0}", rho.nrows(), rho.ncols()),
                    ));
                }
                Some(rho)
            }
            None => None,
        };
        if mu0.is_none() && rho0.is_none() {
            return Err(CliError::config("initial_state", "needs mu0 or rho0"));
        }

        let pen_raw = raw.penalty.as_ref().ok_or_else(|| CliError::config("penalty", "missing"))?;
        let penalty = match (&pen_raw.pi, &pen_raw.gamma, pen_raw.epsilon) {
            (Some(pi), None, None) => PenaltyChoice::Direct(matrix_from_rows("penalty.pi", pi)?),
            (None, Some(g), Some(eps)) => {
                if !(eps > 0.0) || !eps.is_finite() {
                    return Err(CliError::config("penalty.epsilon", "must be positive"));
                }
                PenaltyChoice::ShapeScale {
                    gamma: matrix_from_rows("penalty.gamma", g)?,
                    epsilon: eps,
                }
            }
            _ => {
                return Err(CliError::config(
                    "penalty",
                    "give either {pi} or {gamma, epsilon}",
                ));
            }
        };
        let r = k_ctrl.ncols();
        let pen_dim = match &penalty {
            PenaltyChoice::Direct(pi) => pi.nrows(),
            PenaltyChoice::ShapeScale { gamma, .. } => gamma.nrows(),
        };
        if pen_dim != r {
            return Err(CliError::config(
                "penalty",
                format!("penalty is {pen_dim}x{pen_dim}, control has {r} inputs"),
            ));
        }

        let horizon = raw.horizon.ok_or_else(|| CliError::config("horizon", "missing"))?;
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(CliError::config("horizon", "must be positive"));
        }
        let step = raw.step.unwrap_or(horizon * qmem_core::tol::DEFAULT_STEP_FRACTION);
        if !(step > 0.0) || step > horizon / 10.0 {
            return Err(CliError::config(
                "step",
                format!("must satisfy 0 < step <= horizon/10 = {}", horizon / 10.0),
            ));
        }
        let control =
            ControlChoice::parse(raw.control.as_deref().unwrap_or("zero"))?;
        let output = PathBuf::from(raw.output.clone().unwrap_or_else(|| "out".into()));
        let seed = raw.seed.unwrap_or(0);
        let include_z = raw.include_z.unwrap_or(false);

        let canonical = RawConfig {
            preset: None,
            qubits: Some(qubits),
            e_star: Some(e_star.iter().cloned().collect()),
            k: Some(rows_of(&k_ctrl)),
            m: Some(rows_of(&m_coupling)),
            n: Some(n_offset.iter().cloned().collect()),
            f: Some(rows_of(&f_select)),
            initial_state: Some(RawInitialState {
                mu0: mu0.as_ref().map(|v| v.iter().cloned().collect()),
                rho0: rho0.as_ref().map(|r| RawComplexMatrix {
                    re: complex_rows(r, false),
                    im: Some(complex_rows(r, true)),
                }),
            }),
            penalty: Some(match &penalty {
                PenaltyChoice::Direct(pi) => {
                    RawPenalty { pi: Some(rows_of(pi)), gamma: None, epsilon: None }
                }
                PenaltyChoice::ShapeScale { gamma, epsilon } => RawPenalty {
                    pi: None,
                    gamma: Some(rows_of(gamma)),
                    epsilon: Some(*epsilon),
                },
            }),
            horizon: Some(horizon),
            step: Some(step),
            control: Some(control.as_str()),
            output: Some(output.display().to_string()),
            seed: Some(seed),
            include_z: Some(include_z),
        };

        Ok(Self {
            qubits,
            basis,
            e_star,
            k_ctrl,
            m_coupling,
            n_offset,
            f_select,
            mu0,
            rho0,
            penalty,
            horizon,
            step,
            control,
            output,
            seed,
            include_z,
            canonical,
        })
    }

    /// Builds the validated system; fails on physical violations
    /// (inadmissible state, rank-deficient selection, inconsistent state
    /// pair).
    pub fn system(&self) -> Result<SystemSpec, CliError> {
        let initial = match (&self.mu0, &self.rho0) {
            (Some(mu), None) => InitialState::Mean(mu.clone()),
            (None, Some(rho)) => InitialState::Density(rho.clone()),
            (Some(mu), Some(rho)) => {
                InitialState::Both { mu0: mu.clone(), rho0: rho.clone() }
            }
            (None, None) => unreachable!("checked at resolve time"),
        };
        Ok(SystemSpec::new(
            self.basis.clone(),
            self.e_star.clone(),
            self.k_ctrl.clone(),
            self.m_coupling.clone(),
            self.n_offset.clone(),
            self.f_select.clone(),
            initial,
        )?)
    }

    /// Canonical form: fully populated, preset expanded, defaults applied.
    /// Resolving the canonical form reproduces it verbatim.
    pub fn canonical(&self) -> &RawConfig {
        &self.canonical
    }

    /// A density matrix realizing mu0. With the full variable basis the
    /// mean vector determines the state uniquely:
    /// rho = (I + sum_k mu_k X_k) / d.
    pub fn density(&self) -> Result<DMatrix<Complex64>, CliError> {
        if let Some(rho) = &self.rho0 {
            return Ok(rho.clone());
        }
        let mu = self.mu0.as_ref().expect("resolve guarantees one of mu0/rho0");
        let d = self.basis.dim;
        let mut rho = DMatrix::<Complex64>::identity(d, d);
        for (k, x) in self.basis.matrices.iter().enumerate() {
            rho += x * Complex64::new(mu[k], 0.0);
        }
        rho /= Complex64::new(d as f64, 0.0);
        // Validates Hermiticity, trace and positivity.
        qmem_core::structure::mean_from_state(&self.basis, &rho)?;
        Ok(rho)
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn complex_rows(m: &DMatrix<Complex64>, imaginary: bool) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| if imaginary { m[(i, j)].im } else { m[(i, j)].re })
                .collect()
        })
        .collect()
}
