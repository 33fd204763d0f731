//! Strongly coupled systems `u'' + u' + Au + Cv = 0`, `v'' + Av + Cᵀu = 0`
//! on a finite Galerkin truncation with an orthonormal basis of `H`.
//!
//! `V` carries the norm `‖u‖ = |A^{1/2} u|` and `V'` the norm
//! `|A^{-1/2} u|`, so operator norms between these spaces reduce to
//! largest singular values of rescaled matrices.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{
    is_positive_definite, lie_derivative, positivity_limit, strictness_rate, Block, BlockLayout,
    CertificateReport, FormBuilder, LinearFlow, QuadraticForm,
};
use crate::numerics::{sym_eig, sym_matrix_fn};
use crate::search::maximize_log;

/// Default weight of the `(u, w)` product.
pub const DEFAULT_P: f64 = 3.0;

/// Relative size of the smallest singular value below which `C` counts as
/// singular.
const SINGULAR_RATIO: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct OperatorPair {
    a: DMatrix<f64>,
    c: DMatrix<f64>,
    c_adjoint: DMatrix<f64>,
    a_half: DMatrix<f64>,
    a_inv_half: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    c_inv: DMatrix<f64>,
    lambda1: f64,
}

impl OperatorPair {
    pub fn new(a: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(Error::invalid("A must be a nonempty square matrix"));
        }
        if c.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.nrows(),
            });
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("C has non-finite entries"));
        }
        // Fails on asymmetric or non-finite A.
        let eigs = sym_eig(&a)?;
        let lambda1 = eigs[0];
        if !(lambda1 > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "A has smallest eigenvalue {lambda1:e}"
            )));
        }
        let sv = c.singular_values();
        let (smin, smax) = (sv.min(), sv.max());
        if !(smin > SINGULAR_RATIO * smax) {
            return Err(Error::ConditionFailure {
                reason: format!("C is singular (ker C = 0 fails); smallest singular value {smin:e}"),
                report: None,
            });
        }
        let mut a = a;
        crate::numerics::symmetrize_in_place(&mut a);
        let a_half = sym_matrix_fn(&a, f64::sqrt)?;
        let a_inv_half = sym_matrix_fn(&a, |x| 1.0 / x.sqrt())?;
        let a_inv = sym_matrix_fn(&a, |x| 1.0 / x)?;
        let c_inv = c
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::ConditionFailure {
                reason: "C is not invertible".into(),
                report: None,
            })?;
        Ok(OperatorPair {
            c_adjoint: c.transpose(),
            a,
            c,
            a_half,
            a_inv_half,
            a_inv,
            c_inv,
            lambda1,
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn c_adjoint(&self) -> &DMatrix<f64> {
        &self.c_adjoint
    }

    pub fn a_half(&self) -> &DMatrix<f64> {
        &self.a_half
    }

    pub fn a_inv(&self) -> &DMatrix<f64> {
        &self.a_inv
    }

    pub fn c_inv(&self) -> &DMatrix<f64> {
        &self.c_inv
    }

    /// Smallest eigenvalue of `A`.
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// `A C⁻¹`.
    pub fn a_c_inv(&self) -> DMatrix<f64> {
        &self.a * &self.c_inv
    }

    /// `C⁻¹ A`.
    pub fn c_inv_a(&self) -> DMatrix<f64> {
        &self.c_inv * &self.a
    }

    /// `‖C‖` as a map `V → V'`.
    pub fn norm_c(&self) -> f64 {
        (&self.a_inv_half * &self.c * &self.a_inv_half).singular_values().max()
    }
}

/// Operator norms entering the decay estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    /// `‖C‖_{L(V, V')}`, must be `< 1`.
    pub norm_c_v_vprime: f64,
    /// `‖C⁻¹‖_{L(H, V)}`.
    pub norm_cinv_h_v: f64,
    /// `‖C⁻¹‖_{L(V', H)}`.
    pub norm_cinv_vprime_h: f64,
    /// `‖AC⁻¹ − C⁻¹A‖_{L(H, H)}`.
    pub norm_commutator_d: f64,
    /// Ratio of extreme singular values of `C`.
    pub c_condition_number: f64,
    pub passes: bool,
}

pub fn check_conditions(pair: &OperatorPair) -> ConditionReport {
    let norm_c = pair.norm_c();
    let norm_cinv_h_v = (&pair.a_half * &pair.c_inv).singular_values().max();
    let norm_cinv_vprime_h = (&pair.c_inv * &pair.a_half).singular_values().max();
    let commutator = pair.a_c_inv() - pair.c_inv_a();
    let norm_commutator_d = commutator.singular_values().max();
    let sv = pair.c.singular_values();
    ConditionReport {
        norm_c_v_vprime: norm_c,
        norm_cinv_h_v,
        norm_cinv_vprime_h,
        norm_commutator_d,
        c_condition_number: sv.max() / sv.min(),
        passes: norm_c < 1.0,
    }
}

/// `U' = SU` with `u' = w`, `v' = z`, `w' = −Au − Cv − w`, `z' = −Av − Cᵀu`.
pub fn generator(pair: &OperatorPair) -> LinearFlow {
    let n = pair.n();
    let mut s = DMatrix::zeros(4 * n, 4 * n);
    let (u, v, w, z) = (0, n, 2 * n, 3 * n);
    for i in 0..n {
        s[(u + i, w + i)] = 1.0;
        s[(v + i, z + i)] = 1.0;
        s[(w + i, w + i)] = -1.0;
    }
    for i in 0..n {
        for j in 0..n {
            s[(w + i, u + j)] = -pair.a[(i, j)];
            s[(w + i, v + j)] = -pair.c[(i, j)];
            s[(z + i, v + j)] = -pair.a[(i, j)];
            s[(z + i, u + j)] = -pair.c_adjoint[(i, j)];
        }
    }
    LinearFlow::with_layout(s, BlockLayout::uniform(n)).expect("uniform layout")
}

fn base_builder(pair: &OperatorPair) -> FormBuilder {
    let n = pair.n();
    let id = DMatrix::identity(n, n);
    let mut b = FormBuilder::new(n);
    b.square(Block::U, &pair.a, 0.5)
        .square(Block::V, &pair.a, 0.5)
        .square(Block::W, &id, 0.5)
        .square(Block::Z, &id, 0.5)
        .bilinear(Block::U, Block::V, &pair.c, 1.0);
    b
}

/// `H₀ = ½(‖u‖² + ‖v‖² + |w|² + |z|²) + ⟨Cv, u⟩`.
pub fn base_energy_form(pair: &OperatorPair) -> QuadraticForm {
    base_builder(pair).build("H0")
}

fn condition_failure(report: ConditionReport) -> Error {
    Error::ConditionFailure {
        reason: format!(
            "need ||C||_(V,V') < 1, got {:.6e}",
            report.norm_c_v_vprime
        ),
        report: Some(Box::new(report)),
    }
}

fn check_p_eps(p: f64, eps: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() || !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!("need p > 1 and eps >= 0, got p = {p}, eps = {eps}")));
    }
    Ok(())
}

fn liapunov_unchecked(pair: &OperatorPair, p: f64, eps: f64) -> QuadraticForm {
    let n = pair.n();
    let id = DMatrix::identity(n, n);
    let skew = (p + 1.0) * eps / 2.0;
    let mut b = base_builder(pair);
    b.bilinear(Block::V, Block::Z, &id, -eps)
        .bilinear(Block::U, Block::W, &id, p * eps)
        .bilinear(Block::V, Block::W, &pair.a_c_inv(), skew)
        .bilinear(Block::Z, Block::U, &pair.c_inv_a(), -skew);
    b.build("H_eps")
}

/// `H_ε = H₀ − ε(v, z) + pε(u, w) + ((p+1)ε/2)[⟨AC⁻¹w, v⟩ − ⟨C⁻¹Au, z⟩]`.
pub fn liapunov_form_strong(pair: &OperatorPair, p: f64, eps: f64) -> Result<QuadraticForm> {
    check_p_eps(p, eps)?;
    let report = check_conditions(pair);
    if !report.passes {
        return Err(condition_failure(report));
    }
    Ok(liapunov_unchecked(pair, p, eps))
}

/// Certifies `H_ε` against itself and records the slack of the bound
/// `dH_ε/dt ≤ −(ε/2)(|w|² + |z|²) − ((p−1)ε/4)(1 − ‖C‖)(‖u‖² + ‖v‖²)`.
pub fn certify_strong(pair: &OperatorPair, p: f64, eps: f64) -> Result<CertificateReport> {
    check_p_eps(p, eps)?;
    let conditions = check_conditions(pair);
    if !conditions.passes {
        let mut r = CertificateReport::new(f64::NAN, 0.0, 0.0).with_params(p, eps);
        r.valid = false;
        r.note(format!(
            "||C||_(V,V') = {:.6e} is not below 1",
            conditions.norm_c_v_vprime
        ));
        return Ok(r);
    }
    certify_with_norm(pair, &generator(pair), p, eps, conditions.norm_c_v_vprime)
}

fn certify_with_norm(
    pair: &OperatorPair,
    flow: &LinearFlow,
    p: f64,
    eps: f64,
    norm_c: f64,
) -> Result<CertificateReport> {
    let form = liapunov_unchecked(pair, p, eps);
    let (_, margin) = is_positive_definite(&form, 0.0)?;
    let mut report = if margin > 0.0 {
        let gamma = strictness_rate(&form, flow, &form)?;
        CertificateReport::new(margin, gamma, gamma.max(0.0))
    } else {
        let mut r = CertificateReport::new(margin, 0.0, 0.0);
        r.note("H_eps is not positive definite");
        r
    };
    report.bound_slack = Some(bound_slack(pair, flow, &form, p, eps, norm_c)?);
    Ok(report.with_params(p, eps))
}

fn bound_slack(
    pair: &OperatorPair,
    flow: &LinearFlow,
    form: &QuadraticForm,
    p: f64,
    eps: f64,
    norm_c: f64,
) -> Result<f64> {
    let n = pair.n();
    let id = DMatrix::identity(n, n);
    let mut b = FormBuilder::new(n);
    b.square(Block::W, &id, eps / 2.0)
        .square(Block::Z, &id, eps / 2.0)
        .square(Block::U, &pair.a, (p - 1.0) * eps / 4.0 * (1.0 - norm_c))
        .square(Block::V, &pair.a, (p - 1.0) * eps / 4.0 * (1.0 - norm_c));
    let lie = lie_derivative(form, flow)?;
    let sum = lie.matrix() + b.build("bound").matrix();
    let eigs = sym_eig(&sum)?;
    Ok(-eigs[eigs.len() - 1])
}

/// Largest `ε` keeping `H_ε` positive definite, capped at `1e6`.
pub fn epsilon_limit(pair: &OperatorPair, p: f64) -> Result<f64> {
    let base = base_energy_form(pair);
    let unit = liapunov_unchecked(pair, p, 1.0);
    let direction = base.axpy(-1.0, &unit)?;
    Ok(positivity_limit(&base, &direction)?.min(1e6))
}

/// Maximizes the certified rate over `ε ∈ (0, ε_max)`.
pub fn auto_epsilon(pair: &OperatorPair, p: f64) -> Result<(f64, CertificateReport)> {
    check_p_eps(p, 0.0)?;
    let conditions = check_conditions(pair);
    if !conditions.passes {
        return Err(condition_failure(conditions));
    }
    let flow = generator(pair);
    let hi = epsilon_limit(pair, p)? * (1.0 - 1e-9);
    let rate = |eps: f64| {
        let form = liapunov_unchecked(pair, p, eps);
        strictness_rate(&form, &flow, &form).ok()
    };
    let (eps, _) = maximize_log(rate, hi * 1e-7, hi, 24, 40).ok_or_else(|| {
        Error::NoCertificate(format!("no admissible eps for p = {p}"))
    })?;
    let report = certify_with_norm(pair, &flow, p, eps, conditions.norm_c_v_vprime)?;
    if !report.valid {
        return Err(Error::NoCertificate(format!(
            "best eps = {eps:e} gives strictness {:e}",
            report.strictness
        )));
    }
    Ok((eps, report))
}
