//! The scalar system
//!
//! ```text
//! u'' + u' + λu + cv = 0
//! v''      + λv + cu = 0,      0 < |c| < λ,
//! ```
//!
//! with state `(u, v, w, z) = (u, v, u', v')`. Damping is normalized to 1;
//! a system with damping `b u'` reduces to this one under `t ↦ b t` with
//! `λ ↦ λ / b²` and `c ↦ c / b²`.

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{
    is_positive_definite, positivity_limit, strictness_rate, Block, BlockLayout,
    CertificateReport, FormBuilder, LinearFlow, QuadraticForm,
};
use crate::numerics::{poly_roots, Polynomial};
use crate::search::maximize_log;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarParams {
    lambda: f64,
    c: f64,
}

impl ScalarParams {
    pub fn new(lambda: f64, c: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() || !c.is_finite() {
            return Err(Error::invalid(format!("need finite lambda > 0, got {lambda}")));
        }
        if !(0.0 < c.abs() && c.abs() < lambda) {
            return Err(Error::InvalidCoupling(format!(
                "need 0 < |c| < lambda, got lambda = {lambda}, c = {c}"
            )));
        }
        Ok(ScalarParams { lambda, c })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `c / λ`.
    pub fn theta(&self) -> f64 {
        self.c.abs() / self.lambda
    }
}

/// Intermediate values of the closed-form rate-bound chain, or of the
/// numerically optimized certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBoundParams {
    pub p: f64,
    pub gamma_aux: f64,
    pub epsilon: f64,
    pub theta: f64,
    /// Certified exponential rate of `H_ε` (form level).
    pub delta: f64,
}

impl RateBoundParams {
    /// Norm-level rate `δ / 2`.
    pub fn norm_rate(&self) -> f64 {
        0.5 * self.delta
    }
}

fn one(x: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, x)
}

pub fn flow_matrix(params: &ScalarParams) -> LinearFlow {
    let (l, c) = (params.lambda, params.c);
    #[rustfmt::skip]
    let s = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        -l,  -c,  -1.0, 0.0,
        -c,  -l,  0.0, 0.0,
    ]);
    LinearFlow::with_layout(s, BlockLayout::uniform(1)).expect("4x4 layout")
}

fn energy_builder(params: &ScalarParams) -> FormBuilder {
    let mut b = FormBuilder::new(1);
    let stiffness = one(params.lambda);
    let unit = one(1.0);
    b.square(Block::U, &stiffness, 0.5)
        .square(Block::V, &stiffness, 0.5)
        .square(Block::W, &unit, 0.5)
        .square(Block::Z, &unit, 0.5)
        .bilinear(Block::U, Block::V, &one(params.c), 1.0);
    b
}

/// `ℰ = ½(w² + z² + λ(u² + v²)) + c uv`.
pub fn energy_form(params: &ScalarParams) -> QuadraticForm {
    energy_builder(params).build("energy")
}

/// `H_ε = ℰ − ε vz + pε uw + ((p+1)λε / 2c)(wv − uz)`.
pub fn liapunov_form(params: &ScalarParams, p: f64, eps: f64) -> Result<QuadraticForm> {
    if !(p > 1.0) || !(eps >= 0.0) || !p.is_finite() || !eps.is_finite() {
        return Err(Error::invalid(format!("need p > 1 and eps >= 0, got p = {p}, eps = {eps}")));
    }
    if params.c == 0.0 {
        return Err(Error::InvalidCoupling("c = 0 in the skew-product coefficient".into()));
    }
    let mut b = energy_builder(params);
    let unit = one(1.0);
    // λ/c appears as the 1x1 instance of A C⁻¹ = C⁻¹ A.
    let ratio = one(params.lambda * (1.0 / params.c));
    let skew = (p + 1.0) * eps / 2.0;
    b.bilinear(Block::V, Block::Z, &unit, -eps)
        .bilinear(Block::U, Block::W, &unit, p * eps)
        .bilinear(Block::V, Block::W, &ratio, skew)
        .bilinear(Block::Z, Block::U, &ratio, -skew);
    Ok(b.build("H_eps"))
}

/// `P(ζ) = (ζ² + λ)(ζ² + ζ + λ) − c²` expanded.
pub fn char_poly(params: &ScalarParams) -> Polynomial {
    let (l, c) = (params.lambda, params.c);
    Polynomial::new(vec![1.0, 1.0, 2.0 * l, l, l * l - c * c]).expect("quartic")
}

pub fn roots(params: &ScalarParams) -> Result<Vec<Complex<f64>>> {
    poly_roots(&char_poly(params))
}

/// Logarithmic decrement `min_j −Re ζ_j`.
pub fn decrement_spectral(params: &ScalarParams) -> Result<f64> {
    Ok(roots(params)?
        .iter()
        .map(|z| -z.re)
        .fold(f64::INFINITY, f64::min))
}

/// Residuals of the real and imaginary parts of `P(s + ia) = 0` written in
/// terms of `(s, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootRelations {
    /// `a [4s³ + 4(λ − a²)s + 3s² + λ − a²]`.
    pub res_imag: f64,
    /// `a² − λ − (4s³ + 3s²)/(1 + 4s)`; `None` when `1 + 4s = 0` makes the
    /// relation singular.
    pub res_a2: Option<f64>,
    /// `Re P(s + ia)`, expanded in `(s, a)`.
    pub res_real: f64,
}

pub fn check_root_relations(params: &ScalarParams, root: Complex<f64>) -> RootRelations {
    let l = params.lambda;
    let c = params.c;
    let (s, a) = (root.re, root.im);
    let a2 = a * a;
    let res_imag = a * (4.0 * s.powi(3) + 4.0 * (l - a2) * s + 3.0 * s * s + l - a2);
    let denom = 1.0 + 4.0 * s;
    let res_a2 = if denom.abs() <= 1e-14 || a == 0.0 {
        None
    } else {
        Some(a2 - l - (4.0 * s.powi(3) + 3.0 * s * s) / denom)
    };
    RootRelations {
        res_imag,
        res_a2,
        res_real: real_part_condition(l, s, a2) - c * c,
    }
}

/// `Re P(s + ia) + c²` as a polynomial in `s` and `a²`.
fn real_part_condition(l: f64, s: f64, a2: f64) -> f64 {
    s.powi(4) - 6.0 * s * s * a2 + a2 * a2 + s.powi(3) - 3.0 * s * a2
        + 2.0 * l * (s * s - a2)
        + l * s
        + l * l
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealRootOnset {
    pub has_real_root: bool,
    /// The real root `−θ` closest to the origin.
    pub root: Option<f64>,
}

/// Real roots `ζ = −θ` solve `G(θ) = |c|` with
/// `G(θ) = √((λ + θ²)(λ − θ + θ²))`; all of them lie in `(−1, 0)`.
pub fn real_root_onset(lambda: f64, c: f64) -> Result<RealRootOnset> {
    let params = ScalarParams::new(lambda, c)?;
    let c2 = c * c;
    let g2 = |t: f64| (lambda + t * t) * (lambda - t + t * t);
    const SCAN: usize = 4000;
    let mut prev = 0.0;
    for i in 1..=SCAN {
        let t = i as f64 / SCAN as f64;
        if g2(t) <= c2 {
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g2(mid) > c2 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let theta = 0.5 * (lo + hi);
            let residual = char_poly(&params).eval(-theta);
            if residual.abs() > 1e-9 * lambda.max(1.0).powi(2) {
                return Err(Error::NotConverged {
                    what: "real-root bisection",
                    iterations: 200,
                });
            }
            return Ok(RealRootOnset {
                has_real_root: true,
                root: Some(-theta),
            });
        }
        prev = t;
    }
    Ok(RealRootOnset {
        has_real_root: false,
        root: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NearOptimal {
    pub params: ScalarParams,
    pub predicted_decrement: f64,
    /// Imaginary part of the designed root pair `−1/4 + ε ± ia`.
    pub a: f64,
    pub computed_decrement: f64,
}

/// Parameters whose decrement is exactly `1/4 − ε`: `λ = 1/(16ε)` and `c`
/// chosen so that `−1/4 + ε ± ia` are roots; the remaining pair then has
/// real part `−1/4 − ε`.
pub fn near_optimal_params(eps: f64) -> Result<NearOptimal> {
    if !(eps > 0.0 && eps <= 0.02) {
        return Err(Error::invalid(format!("need 0 < eps <= 0.02, got {eps}")));
    }
    let lambda = 1.0 / (16.0 * eps);
    let s = -0.25 + eps;
    let a2 = lambda + (4.0 * s.powi(3) + 3.0 * s * s) / (1.0 + 4.0 * s);
    if !(a2 > 0.0) {
        return Err(Error::ConstructionFailed(format!("a² = {a2} is not positive")));
    }
    let c2 = real_part_condition(lambda, s, a2);
    if !(c2 > 0.0) {
        return Err(Error::ConstructionFailed(format!("c² = {c2} is not positive")));
    }
    let c = c2.sqrt();
    if c >= lambda {
        return Err(Error::ConstructionFailed(format!("c = {c} >= lambda = {lambda}")));
    }
    let params = ScalarParams::new(lambda, c)?;
    let all = roots(&params)?;
    let designed = Complex::new(s, a2.sqrt());
    let mut rest: Vec<Complex<f64>> = all.clone();
    for target in [designed, designed.conj()] {
        let (idx, _) = rest
            .iter()
            .enumerate()
            .map(|(i, z)| (i, (z - target).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("four roots");
        rest.remove(idx);
    }
    if rest.iter().any(|z| z.im.abs() <= 1e-9 * (1.0 + z.norm())) {
        return Err(Error::Regime(format!(
            "remaining roots {} and {} are real",
            rest[0], rest[1]
        )));
    }
    let computed = all.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);
    Ok(NearOptimal {
        params,
        predicted_decrement: 0.25 - eps,
        a: a2.sqrt(),
        computed_decrement: computed,
    })
}

/// The closed-form chain
///
/// ```text
/// p = 1 + 2 / ((1 − γ)(1 − θ))
/// ε = 1 / (1 + p + (1 − γ)/(16γλ) [4p² + (p + 1)²/θ²])
/// δ = ε / ((λ + c)/(2λ) + ε (p/(2√λ) + (p + 1)√λ/(4c)))
/// ```
///
/// with `θ = |c|/λ` and the auxiliary splitting constant `γ ∈ (0, 1)`.
pub fn rate_bound(params: &ScalarParams, gamma_aux: f64) -> Result<RateBoundParams> {
    if !(gamma_aux > 0.0 && gamma_aux < 1.0) {
        return Err(Error::invalid(format!("need 0 < gamma < 1, got {gamma_aux}")));
    }
    let l = params.lambda;
    let c = params.c.abs();
    let theta = c / l;
    let p = 1.0 + 2.0 / ((1.0 - gamma_aux) * (1.0 - theta));
    let eps = 1.0
        / (1.0
            + p
            + (1.0 - gamma_aux) / (16.0 * gamma_aux * l)
                * (4.0 * p * p + (p + 1.0).powi(2) / (theta * theta)));
    if !(p > 1.0) || !(eps > 0.0) {
        return Err(Error::Regime(format!("chain gives p = {p}, eps = {eps}")));
    }
    let sl = l.sqrt();
    let delta = eps / ((l + c) / (2.0 * l) + eps * (p / (2.0 * sl) + (p + 1.0) * sl / (4.0 * c)));
    Ok(RateBoundParams {
        p,
        gamma_aux,
        epsilon: eps,
        theta,
        delta,
    })
}

/// Certificate of `H_ε` against itself.
pub fn certify(params: &ScalarParams, p: f64, eps: f64) -> Result<CertificateReport> {
    let form = liapunov_form(params, p, eps)?;
    let flow = flow_matrix(params);
    let (_, margin) = is_positive_definite(&form, 0.0)?;
    let report = if margin > 0.0 {
        let gamma = strictness_rate(&form, &flow, &form)?;
        CertificateReport::new(margin, gamma, gamma.max(0.0))
    } else {
        let mut r = CertificateReport::new(margin, 0.0, 0.0);
        r.note("H_eps is not positive definite");
        r
    };
    Ok(report.with_params(p, eps))
}

/// Rate of `H_ε` against itself, `None` where it is not positive definite.
fn self_rate(params: &ScalarParams, flow: &LinearFlow, p: f64, eps: f64) -> Option<f64> {
    let form = liapunov_form(params, p, eps).ok()?;
    strictness_rate(&form, flow, &form).ok()
}

const P_GRID: usize = 40;
const P_MIN: f64 = 1.1;
const P_MAX: f64 = 10.0;

/// Best certified `δ` of the family `H_ε` over `p ∈ [1.1, 10]` and `ε`.
pub fn optimize_rate_bound(params: &ScalarParams) -> Result<RateBoundParams> {
    let flow = flow_matrix(params);
    let energy = energy_form(params);
    let theta = params.theta();
    let gamma_aux = (params.lambda.sqrt() / params.c.abs()).min(0.5);
    let seed = rate_bound(params, gamma_aux)?;

    let mut best: Option<(f64, f64, f64)> = None;
    let mut consider = |p: f64, eps: f64, rate: f64| {
        if rate > 0.0 && best.is_none_or(|(_, _, r)| rate > r) {
            best = Some((p, eps, rate));
        }
    };
    if let Some(rate) = self_rate(params, &flow, seed.p, seed.epsilon) {
        consider(seed.p, seed.epsilon, rate);
    }
    let mut p_values: Vec<f64> = (0..P_GRID)
        .map(|i| P_MIN * ((P_MAX / P_MIN).ln() * i as f64 / (P_GRID - 1) as f64).exp())
        .collect();
    p_values.push(seed.p);
    for p in p_values {
        // H_ε = ℰ + ε (H_1 − ℰ) is affine in ε.
        let unit = liapunov_form(params, p, 1.0)?;
        let direction = energy.axpy(-1.0, &unit)?;
        let limit = positivity_limit(&energy, &direction)?.min(1e6);
        let hi = limit * (1.0 - 1e-9);
        if let Some((eps, rate)) =
            maximize_log(|e| self_rate(params, &flow, p, e), hi * 1e-7, hi, 24, 48)
        {
            consider(p, eps, rate);
        }
    }
    let (p, epsilon, delta) = best.ok_or_else(|| {
        Error::NoCertificate(format!(
            "no positive certificate for lambda = {}, c = {}",
            params.lambda, params.c
        ))
    })?;
    Ok(RateBoundParams {
        p,
        gamma_aux,
        epsilon,
        theta,
        delta,
    })
}

/// One point of a `(λ, c)` parameter scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub lambda: f64,
    pub c: f64,
    pub spectral_decrement: f64,
    pub certified_delta: f64,
    pub certified_norm_rate: f64,
    pub has_real_root: bool,
    pub certificate_valid: bool,
}

/// Spectral decrement and best certificate at one parameter point; a point
/// without a certificate is reported with zero rates.
pub fn scan_point(params: &ScalarParams) -> Result<ScanPoint> {
    let spectral_decrement = decrement_spectral(params)?;
    let has_real_root = real_root_onset(params.lambda, params.c.abs())?.has_real_root;
    let (certified_delta, certificate_valid) = match optimize_rate_bound(params) {
        Ok(best) => (best.delta, true),
        Err(Error::NoCertificate(_)) => (0.0, false),
        Err(e) => return Err(e),
    };
    Ok(ScanPoint {
        lambda: params.lambda,
        c: params.c,
        spectral_decrement,
        certified_delta,
        certified_norm_rate: 0.5 * certified_delta,
        has_real_root,
        certificate_valid,
    })
}
