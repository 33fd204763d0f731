use nalgebra::{Complex, DMatrix};

use super::Tolerances;
use crate::error::{Error, Result};

const MAX_DEGREE: usize = 12;
const NEWTON_STEPS: usize = 12;

/// Real polynomial with coefficients stored highest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::invalid("polynomial must have degree >= 1"));
        }
        if coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::invalid(format!(
                "polynomial degree {} exceeds {MAX_DEGREE}",
                coeffs.len() - 1
            )));
        }
        if coeffs[0] == 0.0 {
            return Err(Error::invalid("leading coefficient must be nonzero"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("polynomial coefficients must be finite"));
        }
        Ok(Polynomial { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex<f64>) -> Complex<f64> {
        self.coeffs
            .iter()
            .fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first derivative at `z` by a single Horner pass.
    fn eval_with_derivative(&self, z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
        let zero = Complex::new(0.0, 0.0);
        self.coeffs.iter().fold((zero, zero), |(p, dp), &c| (p * z + c, dp * z + p))
    }

    /// Scaled residual `|p(z)| / (|a_0| (1 + |z|^deg))`.
    pub fn scaled_residual(&self, z: Complex<f64>) -> f64 {
        self.eval_complex(z).norm()
            / (self.coeffs[0].abs() * (1.0 + z.norm().powi(self.degree() as i32)))
    }

    fn companion(&self) -> DMatrix<f64> {
        let n = self.degree();
        let lead = self.coeffs[0];
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(0, j)] = -self.coeffs[j + 1] / lead;
        }
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        m
    }
}

/// All roots of `p`, with multiplicity, using default tolerances.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex<f64>>> {
    poly_roots_with(p, &Tolerances::default())
}

/// Companion-matrix eigenvalues followed by Newton polishing.
pub fn poly_roots_with(p: &Polynomial, tol: &Tolerances) -> Result<Vec<Complex<f64>>> {
    let mut roots: Vec<Complex<f64>> = p.companion().complex_eigenvalues().iter().copied().collect();
    for root in roots.iter_mut() {
        *root = polish(p, *root);
        let residual = p.scaled_residual(*root);
        if !(residual <= tol.root_residual) {
            return Err(Error::NotConverged {
                what: "polynomial root polishing",
                iterations: NEWTON_STEPS,
            });
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

fn polish(p: &Polynomial, mut z: Complex<f64>) -> Complex<f64> {
    let mut value = p.eval_complex(z).norm();
    for _ in 0..NEWTON_STEPS {
        let (f, df) = p.eval_with_derivative(z);
        if df.norm() == 0.0 || value == 0.0 {
            break;
        }
        let step = f / df;
        let candidate = z - step;
        let candidate_value = p.eval_complex(candidate).norm();
        // Newton only moves when it actually reduces the residual; near a
        // multiple root the derivative is tiny and steps become unreliable.
        if !(candidate_value < value) {
            break;
        }
        z = candidate;
        value = candidate_value;
        if step.norm() <= 4.0 * f64::EPSILON * z.norm() {
            break;
        }
    }
    z
}
