use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{expm, Tolerances};
use crate::error::{Error, Result};
use crate::forms::{LinearFlow, QuadraticForm};

const POWER_ITERATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rk4,
    ExpmStep,
}

/// Sampled trajectory with named scalar series evaluated at every sample.
#[derive(Debug, Clone)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub functionals: Vec<(String, Vec<f64>)>,
}

impl DecayTrace {
    pub fn series(&self, label: &str) -> Option<&[f64]> {
        self.functionals
            .iter()
            .find(|(name, _)| name == label)
            .map(|(_, v)| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Spectral radius estimate from the growth of `S^k x` over twenty steps.
pub fn spectral_radius_estimate(s: &DMatrix<f64>) -> f64 {
    let n = s.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_fn(n, |i, _| 1.0 + (i % 7) as f64 / 7.0);
    x /= x.norm();
    let mut log_growth = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let y = s * &x;
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        log_growth += norm.ln();
        x = y / norm;
    }
    (log_growth / POWER_ITERATIONS as f64).exp()
}

pub fn integrate(
    flow: &LinearFlow,
    u0: &DVector<f64>,
    dt: f64,
    horizon: f64,
    method: Method,
    observers: &[QuadraticForm],
) -> Result<DecayTrace> {
    integrate_with(flow, u0, dt, horizon, method, observers, &Tolerances::default())
}

/// Samples `U' = S U` at `k dt` for `k = 0..=round(T / dt)`.
pub fn integrate_with(
    flow: &LinearFlow,
    u0: &DVector<f64>,
    dt: f64,
    horizon: f64,
    method: Method,
    observers: &[QuadraticForm],
    tol: &Tolerances,
) -> Result<DecayTrace> {
    let s = flow.matrix();
    let dim = s.nrows();
    if u0.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: u0.len(),
        });
    }
    if let Some(bad) = observers.iter().find(|q| q.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.dim(),
        });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    if !(horizon >= dt) || !horizon.is_finite() {
        return Err(Error::invalid(format!("T = {horizon} must be at least dt = {dt}")));
    }
    let steps = (horizon / dt).round() as usize;

    type Step = Box<dyn Fn(&DVector<f64>) -> DVector<f64>>;
    let step: Step = match method {
        Method::ExpmStep => {
            let propagator = expm(s, dt)?;
            Box::new(move |u| &propagator * u)
        }
        Method::Rk4 => {
            let radius = spectral_radius_estimate(s);
            if dt * radius > tol.rk4_stability {
                return Err(Error::StepSize {
                    dt,
                    radius,
                    suggested: 0.95 * tol.rk4_stability / radius,
                });
            }
            let s = s.clone();
            Box::new(move |u| {
                let k1 = &s * u;
                let k2 = &s * (u + &k1 * (0.5 * dt));
                let k3 = &s * (u + &k2 * (0.5 * dt));
                let k4 = &s * (u + &k3 * dt);
                u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
            })
        }
    };

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut u = u0.clone();
    for k in 0..=steps {
        times.push(k as f64 * dt);
        states.push(u.clone());
        if k < steps {
            u = step(&u);
        }
    }
    let functionals = observers
        .iter()
        .map(|q| {
            let series = states.iter().map(|x| q.value(x)).collect();
            (q.label().to_string(), series)
        })
        .collect();
    Ok(DecayTrace {
        times,
        states,
        functionals,
    })
}
