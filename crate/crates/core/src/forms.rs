//! Quadratic-form algebra on the state space `U = (u, v, w, z)`.
//!
//! A [`QuadraticForm`] is a symmetric matrix `Q` read as `U ↦ UᵀQU`. Along a
//! [`LinearFlow`] `U' = SU` its time derivative is again a quadratic form,
//! with matrix `SᵀQ + QS`; strictness and sandwich constants are extreme
//! generalized eigenvalues against a positive definite reference form.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{
    expm, gen_eig_extremes, gen_eig_max, spectral_abscissa, sym_eig, Tolerances,
};

/// Largest state dimension accepted by [`gram_liapunov`]; it solves for all
/// `d(d+1)/2` upper-triangle unknowns at once.
pub const GRAM_MAX_DIM: usize = 48;

/// Symmetric matrix representing `U ↦ UᵀQU`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    q: DMatrix<f64>,
    label: String,
}

impl QuadraticForm {
    /// Accepts matrices that are symmetric to [`Tolerances::symmetry`] and
    /// stores their exact symmetric part.
    pub fn new(q: DMatrix<f64>, label: impl Into<String>) -> Result<Self> {
        if !q.is_square() || q.nrows() == 0 {
            return Err(Error::invalid("quadratic form needs a nonempty square matrix"));
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("quadratic form has non-finite entries"));
        }
        let tol = Tolerances::default().symmetry * q.amax();
        let n = q.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (q[(i, j)] - q[(j, i)]).abs() > tol {
                    return Err(Error::invalid(format!(
                        "quadratic form matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_symmetric_part(q, label))
    }

    /// The form whose matrix is the symmetric part of `m`; any square matrix
    /// defines a quadratic form this way.
    pub fn from_symmetric_part(mut m: DMatrix<f64>, label: impl Into<String>) -> Self {
        crate::numerics::symmetrize_in_place(&mut m);
        QuadraticForm {
            q: m,
            label: label.into(),
        }
    }

    pub fn identity(dim: usize, label: impl Into<String>) -> Self {
        QuadraticForm {
            q: DMatrix::identity(dim, dim),
            label: label.into(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `UᵀQU` without a dimension check.
    pub fn value(&self, u: &DVector<f64>) -> f64 {
        u.dot(&(&self.q * u))
    }

    pub fn evaluate(&self, u: &DVector<f64>) -> Result<f64> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        Ok(self.value(u))
    }

    /// `alpha * self + other`.
    pub fn axpy(&self, alpha: f64, other: &QuadraticForm) -> Result<QuadraticForm> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(QuadraticForm {
            q: &self.q * alpha + &other.q,
            label: self.label.clone(),
        })
    }
}

/// Block sizes of the state `(u, v, w, z)`; `u' = w` and `v' = z` force
/// `n_u = n_w` and `n_v = n_z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockLayout {
    pub n_u: usize,
    pub n_v: usize,
    pub n_w: usize,
    pub n_z: usize,
}

impl BlockLayout {
    /// Four blocks of size `n`.
    pub fn uniform(n: usize) -> Self {
        BlockLayout {
            n_u: n,
            n_v: n,
            n_w: n,
            n_z: n,
        }
    }

    pub fn total(&self) -> usize {
        self.n_u + self.n_v + self.n_w + self.n_z
    }

    /// Offset and length of a block.
    pub fn range(&self, block: Block) -> (usize, usize) {
        match block {
            Block::U => (0, self.n_u),
            Block::V => (self.n_u, self.n_v),
            Block::W => (self.n_u + self.n_v, self.n_w),
            Block::Z => (self.n_u + self.n_v + self.n_w, self.n_z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    U,
    V,
    W,
    Z,
}

/// State matrix `S` of `U' = SU`, optionally tagged with its block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFlow {
    s: DMatrix<f64>,
    layout: Option<BlockLayout>,
}

impl LinearFlow {
    pub fn new(s: DMatrix<f64>) -> Result<Self> {
        if !s.is_square() || s.nrows() == 0 {
            return Err(Error::invalid("flow matrix must be nonempty and square"));
        }
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("flow matrix has non-finite entries"));
        }
        Ok(LinearFlow { s, layout: None })
    }

    pub fn with_layout(s: DMatrix<f64>, layout: BlockLayout) -> Result<Self> {
        let mut flow = Self::new(s)?;
        if layout.total() != flow.s.nrows() {
            return Err(Error::invalid(format!(
                "block sizes sum to {}, matrix order is {}",
                layout.total(),
                flow.s.nrows()
            )));
        }
        if layout.n_u != layout.n_w || layout.n_v != layout.n_z {
            return Err(Error::invalid("block layout needs n_u = n_w and n_v = n_z"));
        }
        flow.layout = Some(layout);
        Ok(flow)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn layout(&self) -> Option<BlockLayout> {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// `min_j -Re(zeta_j)` over the eigenvalues of `S`.
    pub fn spectral_decrement(&self) -> Result<f64> {
        spectral_abscissa(&self.s).map(|a| -a)
    }
}

/// Outcome of a strict-Liapunov certification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    /// Smallest eigenvalue of the form matrix.
    pub positivity_margin: f64,
    /// Largest `gamma` with `dQ/dt <= -gamma R` for the reference form `R`.
    pub strictness: f64,
    /// Exponential rate certified for the form itself.
    pub certified_delta: f64,
    pub valid: bool,
    pub p: Option<f64>,
    pub epsilon: Option<f64>,
    /// Slack of an auxiliary dissipation bound, when one was checked.
    pub bound_slack: Option<f64>,
    pub notes: Vec<String>,
}

impl CertificateReport {
    pub fn new(positivity_margin: f64, strictness: f64, certified_delta: f64) -> Self {
        CertificateReport {
            positivity_margin,
            strictness,
            certified_delta,
            valid: positivity_margin > 0.0 && strictness > 0.0,
            p: None,
            epsilon: None,
            bound_slack: None,
            notes: Vec::new(),
        }
    }

    /// Norm-level decay rate `delta / 2`.
    pub fn norm_rate(&self) -> f64 {
        0.5 * self.certified_delta
    }

    pub(crate) fn with_params(mut self, p: f64, epsilon: f64) -> Self {
        self.p = Some(p);
        self.epsilon = Some(epsilon);
        self
    }

    pub(crate) fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }
}

/// Assembles a form on a uniform `(u, v, w, z)` layout from block terms.
///
/// Every term is recorded through its exact symmetric matrix, so building
/// the same terms in the same order always gives bit-identical results.
#[derive(Debug, Clone)]
pub struct FormBuilder {
    layout: BlockLayout,
    q: DMatrix<f64>,
}

impl FormBuilder {
    pub fn new(n: usize) -> Self {
        FormBuilder {
            layout: BlockLayout::uniform(n),
            q: DMatrix::zeros(4 * n, 4 * n),
        }
    }

    /// Adds `coeff * ⟨M x_j, x_i⟩ = coeff * x_iᵀ M x_j` for blocks `i`, `j`.
    pub fn bilinear(&mut self, i: Block, j: Block, m: &DMatrix<f64>, coeff: f64) -> &mut Self {
        let (oi, ni) = self.layout.range(i);
        let (oj, nj) = self.layout.range(j);
        debug_assert_eq!(m.shape(), (ni, nj));
        for r in 0..ni {
            for c in 0..nj {
                let half = coeff * m[(r, c)] * 0.5;
                self.q[(oi + r, oj + c)] += half;
                self.q[(oj + c, oi + r)] += half;
            }
        }
        self
    }

    /// Adds `coeff * x_bᵀ M x_b` for a symmetric `M`.
    pub fn square(&mut self, b: Block, m: &DMatrix<f64>, coeff: f64) -> &mut Self {
        self.bilinear(b, b, m, coeff)
    }

    pub fn build(&self, label: impl Into<String>) -> QuadraticForm {
        QuadraticForm::from_symmetric_part(self.q.clone(), label)
    }
}

pub fn evaluate(q: &QuadraticForm, u: &DVector<f64>) -> Result<f64> {
    q.evaluate(u)
}

/// The form `U ↦ d/dt (U(t)ᵀ Q U(t))` along `U' = SU`, i.e. `SᵀQ + QS`.
pub fn lie_derivative(q: &QuadraticForm, flow: &LinearFlow) -> Result<QuadraticForm> {
    if q.dim() != flow.dim() {
        return Err(Error::DimensionMismatch {
            expected: flow.dim(),
            got: q.dim(),
        });
    }
    let s = flow.matrix();
    let m = s.transpose() * q.matrix() + q.matrix() * s;
    Ok(QuadraticForm::from_symmetric_part(m, format!("d/dt {}", q.label())))
}

/// `(margin > tol, margin)` with `margin` the smallest eigenvalue.
pub fn is_positive_definite(q: &QuadraticForm, tol: f64) -> Result<(bool, f64)> {
    let margin = sym_eig(q.matrix())?[0];
    Ok((margin > tol, margin))
}

/// Largest `gamma` with `lie_derivative(Q) <= -gamma R`. Non-positive values
/// mean no certificate and are returned, not raised.
pub fn strictness_rate(q: &QuadraticForm, flow: &LinearFlow, r: &QuadraticForm) -> Result<f64> {
    let lie = lie_derivative(q, flow)?;
    if r.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: r.dim(),
        });
    }
    gen_eig_max(lie.matrix(), r.matrix()).map(|mu| -mu)
}

/// Largest `m` and smallest `M` with `m R <= Q <= M R`.
pub fn sandwich_constants(q: &QuadraticForm, r: &QuadraticForm) -> Result<(f64, f64)> {
    if r.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: r.dim(),
        });
    }
    gen_eig_extremes(q.matrix(), r.matrix())
}

/// Supremum of `t >= 0` such that `base + t * direction` stays positive
/// definite; `base` must be positive definite. Infinite when the direction
/// never destroys positivity.
pub fn positivity_limit(base: &QuadraticForm, direction: &QuadraticForm) -> Result<f64> {
    if base.dim() != direction.dim() {
        return Err(Error::DimensionMismatch {
            expected: base.dim(),
            got: direction.dim(),
        });
    }
    // base + t D > 0  iff  1 + t mu > 0 for every generalized eigenvalue mu of (D, base).
    let (mu_min, _) = gen_eig_extremes(direction.matrix(), base.matrix())?;
    Ok(if mu_min < 0.0 { -1.0 / mu_min } else { f64::INFINITY })
}

/// `max_t Q(U(t)) / (Q(U₀) e^{−δt})` over samples `t = k dt ≤ T` of
/// trajectories started at each initial state; at most 1 when `Q` decays at
/// rate `δ`.
pub fn decay_ratio(
    flow: &LinearFlow,
    q: &QuadraticForm,
    delta: f64,
    initial_states: &[DVector<f64>],
    horizon: f64,
    dt: f64,
) -> Result<f64> {
    if q.dim() != flow.dim() {
        return Err(Error::DimensionMismatch {
            expected: flow.dim(),
            got: q.dim(),
        });
    }
    if !(dt > 0.0) || !(horizon >= dt) {
        return Err(Error::invalid(format!("need 0 < dt <= T, got dt = {dt}, T = {horizon}")));
    }
    let propagator = expm(flow.matrix(), dt)?;
    let steps = (horizon / dt).round() as usize;
    let mut worst: f64 = 0.0;
    for u0 in initial_states {
        let q0 = q.evaluate(u0)?;
        if !(q0 > 0.0) {
            return Err(Error::invalid("initial state has nonpositive form value"));
        }
        let mut u = u0.clone();
        for k in 1..=steps {
            u = &propagator * &u;
            let bound = q0 * (-delta * k as f64 * dt).exp();
            worst = worst.max(q.value(&u) / bound);
        }
    }
    Ok(worst)
}

/// Liapunov's integral form `Φ(z) = ∫₀^∞ |exp(sS) z|² ds`, obtained as the
/// solution of `SᵀQ + QS = -I`.
pub fn gram_liapunov(flow: &LinearFlow) -> Result<QuadraticForm> {
    let d = flow.dim();
    if d > GRAM_MAX_DIM {
        return Err(Error::invalid(format!(
            "gram_liapunov supports at most {GRAM_MAX_DIM} states, got {d}"
        )));
    }
    let abscissa = spectral_abscissa(flow.matrix())?;
    if !(abscissa < 0.0) {
        return Err(Error::NoCertificate(format!(
            "flow is not Hurwitz (spectral abscissa {abscissa:e})"
        )));
    }
    let s = flow.matrix();
    let index = |i: usize, j: usize| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        a * d - a * (a + 1) / 2 + b
    };
    let m = d * (d + 1) / 2;
    let mut system = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for i in 0..d {
        for j in i..d {
            let row = index(i, j);
            // (SᵀQ)_{ij} = Σ_k S_{ki} Q_{kj};  (QS)_{ij} = Σ_k Q_{ik} S_{kj}.
            for k in 0..d {
                system[(row, index(k, j))] += s[(k, i)];
                system[(row, index(i, k))] += s[(k, j)];
            }
            if i == j {
                rhs[row] = -1.0;
            }
        }
    }
    let x = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NoCertificate("Liapunov equation is singular".into()))?;
    let q = DMatrix::from_fn(d, d, |i, j| x[index(i, j)]);
    Ok(QuadraticForm::from_symmetric_part(q, "gram"))
}
