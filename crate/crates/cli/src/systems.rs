use std::f64::consts::PI;

use liapform::gallery::{self, DiscretizationSpec};
use liapform::strong::OperatorPair;
use liapform::{ScalarParams, WeakSystem};
use nalgebra::DMatrix;

use crate::args::{Example, Profile};
use crate::error::{CliError, CliResult};

/// System description shared by `certify`, `simulate` and `pde`.
#[derive(Debug, Clone, Default)]
pub struct SystemSpec {
    pub example: Option<Example>,
    pub modes: Option<usize>,
    pub length: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub lambda1: Option<f64>,
    pub potential_a: Option<Profile>,
    pub potential_b: Option<Profile>,
    pub multiplier: Option<Profile>,
    pub p: Option<f64>,
    pub epsilon: Option<f64>,
}

/// Defaults per example: modes, length, gamma.
fn pde_defaults(ex: Example) -> (usize, f64, f64) {
    match ex {
        Example::String => (8, 2.0 * PI, 0.3),
        Example::WavePotential => (16, PI, 0.3),
        _ => (16, PI, 0.5),
    }
}

fn profile(p: Profile, length: f64) -> Box<dyn Fn(f64) -> f64> {
    match p {
        Profile::Zero => Box::new(|_| 0.0),
        Profile::Sin => Box::new(f64::sin),
        Profile::Cos => Box::new(f64::cos),
        Profile::Bump => Box::new(move |x| x * (length - x)),
        Profile::Linear => Box::new(|x| 1.0 + x),
    }
}

impl SystemSpec {
    pub fn example_or(&self, default: Example) -> Example {
        self.example.unwrap_or(default)
    }

    /// Number of coupled modes and spatial discretization, when relevant.
    pub fn discretization(&self, ex: Example) -> CliResult<Option<DiscretizationSpec>> {
        match ex {
            Example::Scalar | Example::Complex => Ok(None),
            Example::Weak => Ok(None),
            _ => {
                let (n, length, _) = pde_defaults(ex);
                let spec = DiscretizationSpec::new(
                    self.modes.unwrap_or(n),
                    self.length.unwrap_or(length),
                )?;
                Ok(Some(spec))
            }
        }
    }

    pub fn gamma(&self, ex: Example) -> f64 {
        self.gamma.unwrap_or(pde_defaults(ex).2)
    }

    pub fn build_strong(&self, ex: Example) -> CliResult<OperatorPair> {
        let spec = self.discretization(ex)?;
        let gamma = self.gamma(ex);
        let pair = match ex {
            Example::Scalar => {
                let params = ScalarParams::new(self.lambda.unwrap_or(1.0), self.c.unwrap_or(0.5))?;
                OperatorPair::new(
                    DMatrix::from_element(1, 1, params.lambda()),
                    DMatrix::from_element(1, 1, params.c()),
                )?
            }
            Example::Complex => gallery::complex_scalar(
                self.lambda.unwrap_or(1.0),
                self.c.unwrap_or(0.3),
                self.d.unwrap_or(0.4),
            )?,
            Example::Wave => gallery::wave_strong(spec.as_ref().expect("spec"), gamma)?,
            Example::Plate => gallery::plate_structural(spec.as_ref().expect("spec"), gamma)?,
            Example::String => gallery::string_periodic(spec.as_ref().expect("spec"), gamma)?,
            Example::WavePotential => {
                let spec = spec.expect("spec");
                let a = profile(self.potential_a.unwrap_or(Profile::Sin), spec.length);
                let b = profile(self.potential_b.unwrap_or(Profile::Cos), spec.length);
                gallery::wave_potentials(&spec, gamma, &*a, &*b)?
            }
            Example::PlateMultiplication => {
                let spec = spec.expect("spec");
                let m = profile(self.multiplier.unwrap_or(Profile::Bump), spec.length);
                gallery::plate_multiplication(&spec, gamma, &*m)?
            }
            Example::Weak => {
                return Err(CliError::invalid("the weak system has no strong operator pair"))
            }
        };
        Ok(pair)
    }

    /// `A = diag((kπ/L)²)`, with `L = π/√λ₁` when `lambda1` is given.
    pub fn build_weak(&self) -> CliResult<WeakSystem> {
        let n = self.modes.unwrap_or(8);
        let length = weak_length(self.length, self.lambda1)?;
        Ok(WeakSystem::dirichlet(n, length, self.c.unwrap_or(0.2))?)
    }
}

pub fn weak_length(length: Option<f64>, lambda1: Option<f64>) -> CliResult<f64> {
    match (length, lambda1) {
        (Some(_), Some(_)) => Err(CliError::invalid("give either L or lambda1, not both")),
        (_, Some(l1)) if !(l1 > 0.0) => {
            Err(CliError::invalid(format!("lambda1 must be positive, got {l1}")))
        }
        (_, Some(l1)) => Ok(PI / l1.sqrt()),
        (Some(l), None) => Ok(l),
        (None, None) => Ok(PI),
    }
}
