//! Control signals: zero, sampled (with linear interpolation), or a
//! closed-loop law evaluated on the current auxiliary state.

use nalgebra::{DMatrix, DVector};

use crate::error::CoreError;
use crate::Result;

/// A state-feedback control law u = law(t, z).
pub trait ControlLaw {
    fn control(&self, t: f64, z: &DMatrix<f64>) -> DVector<f64>;
    /// Number of control inputs produced.
    fn dim(&self) -> usize;
}

/// Deterministic control samples on a uniform grid with linear
/// interpolation between nodes. Evaluation clamps to the grid span, so the
/// grid must cover the simulation interval.
#[derive(Debug, Clone)]
pub struct SampledControl {
    t0: f64,
    dt: f64,
    values: Vec<DVector<f64>>,
}

impl SampledControl {
    pub fn new(t0: f64, dt: f64, values: Vec<DVector<f64>>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(CoreError::InvalidArgument(format!(
                "sample step must be positive, got {dt}"
            )));
        }
        if values.len() < 2 {
            return Err(CoreError::InvalidArgument(
                "sampled control needs at least two nodes".into(),
            ));
        }
        let r = values[0].len();
        for (i, v) in values.iter().enumerate() {
            if v.len() != r {
                return Err(CoreError::DimensionMismatch(format!(
                    "control sample {i} has length {}, expected {r}",
                    v.len()
                )));
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(CoreError::InvalidArgument(format!(
                    "control sample {i} contains non-finite values"
                )));
            }
        }
        Ok(Self { t0, dt, values })
    }

    /// Builds samples from a function of time on a uniform grid over
    /// [t0, t1] with `steps` intervals.
    pub fn from_fn<F>(t0: f64, t1: f64, steps: usize, r: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> DVector<f64>,
    {
        if steps == 0 || t1 <= t0 {
            return Err(CoreError::InvalidArgument("empty sampling interval".into()));
        }
        let dt = (t1 - t0) / steps as f64;
        let values: Vec<DVector<f64>> = (0..=steps)
            .map(|i| {
                let v = f(t0 + dt * i as f64);
                debug_assert_eq!(v.len(), r);
                v
            })
            .collect();
        Self::new(t0, dt, values)
    }

    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * (self.values.len() - 1) as f64
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// Linear interpolation, exact at the nodes, clamped outside the grid.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let span = (t - self.t0) / self.dt;
        if span <= 0.0 {
            return self.values[0].clone();
        }
        let last = self.values.len() - 1;
        if span >= last as f64 {
            return self.values[last].clone();
        }
        let cell = span.floor() as usize;
        let frac = span - cell as f64;
        if frac == 0.0 {
            return self.values[cell].clone();
        }
        &self.values[cell] * (1.0 - frac) + &self.values[cell + 1] * frac
    }
}

/// The control input of a simulation run.
pub enum ControlSignal<'a> {
    /// U identically zero.
    Zero { dim: usize },
    /// Open-loop samples with linear interpolation.
    Sampled(&'a SampledControl),
    /// Closed-loop law evaluated at the integrator's stage states.
    Law(&'a dyn ControlLaw),
}

impl<'a> ControlSignal<'a> {
    pub fn dim(&self) -> usize {
        match self {
            ControlSignal::Zero { dim } => *dim,
            ControlSignal::Sampled(s) => s.dim(),
            ControlSignal::Law(law) => law.dim(),
        }
    }

    pub fn eval(&self, t: f64, z: &DMatrix<f64>) -> DVector<f64> {
        match self {
            ControlSignal::Zero { dim } => DVector::zeros(*dim),
            ControlSignal::Sampled(s) => s.eval(t),
            ControlSignal::Law(law) => law.control(t, z),
        }
    }

    /// Checks that an open-loop grid covers [0, tau].
    pub fn validate_span(&self, tau: f64) -> Result<()> {
        if let ControlSignal::Sampled(s) = self {
            if s.t_start() > 0.0 || s.t_end() < tau - 1e-12 {
                return Err(CoreError::InvalidArgument(format!(
                    "sampled control covers [{}, {}] but the run needs [0, {tau}]",
                    s.t_start(),
                    s.t_end()
                )));
            }
        }
        Ok(())
    }
}
