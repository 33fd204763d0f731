//! Weak coupling `u'' + u' + Au + cv = 0`, `v'' + Av + cu = 0` with
//! `0 < |c| < λ₁(A)`.
//!
//! The dual norm is realized through `A`: `‖w‖²_* = (A⁻¹w, w)` and
//! `⟨u, v⟩_* = (A⁻¹u, v)`. The Liapunov function only dissipates the weaker
//! form `K = |u|² + |v|² + ‖w‖²_* + ‖z‖²_*`, which yields `1/t` decay of `K`
//! rather than exponential decay of the energy.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{
    is_positive_definite, positivity_limit, strictness_rate, Block, BlockLayout,
    CertificateReport, FormBuilder, LinearFlow, QuadraticForm,
};
use crate::numerics::{integrate, sym_eig, sym_matrix_fn, DecayTrace, Method};
use crate::search::maximize_log;

/// Default horizon of the decay study.
pub const DEFAULT_HORIZON: f64 = 2000.0;
/// Default step of the decay study (exponential stepping).
pub const DEFAULT_DT: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct WeakSystem {
    a: DMatrix<f64>,
    c: f64,
    lambda1: f64,
    a_inv: DMatrix<f64>,
}

impl WeakSystem {
    pub fn new(a: DMatrix<f64>, c: f64) -> Result<Self> {
        let eigs = sym_eig(&a)?;
        let lambda1 = eigs[0];
        if !(lambda1 > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "A has smallest eigenvalue {lambda1:e}"
            )));
        }
        if !c.is_finite() || c == 0.0 || c.abs() >= lambda1 {
            return Err(Error::InvalidCoupling(format!(
                "need 0 < |c| < lambda_1 = {lambda1}, got c = {c}"
            )));
        }
        let mut a = a;
        crate::numerics::symmetrize_in_place(&mut a);
        let a_inv = sym_matrix_fn(&a, |x| 1.0 / x)?;
        Ok(WeakSystem {
            a,
            c,
            lambda1,
            a_inv,
        })
    }

    /// `A = diag((kπ/L)²)`, `k = 1..=n`.
    pub fn dirichlet(n: usize, length: f64, c: f64) -> Result<Self> {
        if n == 0 || !(length > 0.0) {
            return Err(Error::invalid("need n >= 1 and L > 0"));
        }
        let mu = DVector::from_fn(n, |k, _| ((k + 1) as f64 * PI / length).powi(2));
        Self::new(DMatrix::from_diagonal(&mu), c)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn a_inv(&self) -> &DMatrix<f64> {
        &self.a_inv
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Smallest `p` allowed by `(p+1)/(p−1) < λ₁/|c|`.
    pub fn p_lower_bound(&self) -> f64 {
        let c = self.c.abs();
        (self.lambda1 + c) / (self.lambda1 - c)
    }

    pub fn flow(&self) -> LinearFlow {
        let n = self.n();
        let mut s = DMatrix::zeros(4 * n, 4 * n);
        let (u, v, w, z) = (0, n, 2 * n, 3 * n);
        for i in 0..n {
            s[(u + i, w + i)] = 1.0;
            s[(v + i, z + i)] = 1.0;
            s[(w + i, w + i)] = -1.0;
            s[(w + i, v + i)] = -self.c;
            s[(z + i, u + i)] = -self.c;
            for j in 0..n {
                s[(w + i, u + j)] = -self.a[(i, j)];
                s[(z + i, v + j)] = -self.a[(i, j)];
            }
        }
        LinearFlow::with_layout(s, BlockLayout::uniform(n)).expect("uniform layout")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakLiapunovParams {
    pub p: f64,
    pub epsilon: f64,
    /// `(p+1)λ₁ / (2c)`.
    pub rho: f64,
}

impl WeakLiapunovParams {
    pub fn new(sys: &WeakSystem, p: f64, epsilon: f64) -> Result<Self> {
        if !p.is_finite() || !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::invalid(format!("need finite p and eps >= 0, got {p}, {epsilon}")));
        }
        let lower = sys.p_lower_bound();
        if !(p > 1.0 && (p + 1.0) / (p - 1.0) < sys.lambda1 / sys.c.abs()) {
            return Err(Error::InvalidP { p, lower });
        }
        Ok(WeakLiapunovParams {
            p,
            epsilon,
            rho: (p + 1.0) * sys.lambda1 / (2.0 * sys.c),
        })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        WeakLiapunovParams { epsilon, ..*self }
    }
}

#[derive(Debug, Clone)]
pub struct WeakForms {
    pub energy: QuadraticForm,
    pub energy_minus1: QuadraticForm,
    pub k: QuadraticForm,
}

fn energy_builder(sys: &WeakSystem) -> FormBuilder {
    let n = sys.n();
    let id = DMatrix::identity(n, n);
    let mut b = FormBuilder::new(n);
    b.square(Block::U, &sys.a, 0.5)
        .square(Block::V, &sys.a, 0.5)
        .square(Block::W, &id, 0.5)
        .square(Block::Z, &id, 0.5)
        .bilinear(Block::U, Block::V, &id, sys.c);
    b
}

/// `E`, `E₋₁` and `K`.
pub fn weak_energy_forms(sys: &WeakSystem) -> WeakForms {
    let n = sys.n();
    let id = DMatrix::identity(n, n);
    let mut em1 = FormBuilder::new(n);
    em1.square(Block::U, &id, 0.5)
        .square(Block::V, &id, 0.5)
        .square(Block::W, &sys.a_inv, 0.5)
        .square(Block::Z, &sys.a_inv, 0.5)
        .bilinear(Block::U, Block::V, &sys.a_inv, sys.c);
    let mut k = FormBuilder::new(n);
    k.square(Block::U, &id, 1.0)
        .square(Block::V, &id, 1.0)
        .square(Block::W, &sys.a_inv, 1.0)
        .square(Block::Z, &sys.a_inv, 1.0);
    WeakForms {
        energy: energy_builder(sys).build("E"),
        energy_minus1: em1.build("E_minus1"),
        k: k.build("K"),
    }
}

/// `H_ε = E − ελ₁(v, z)_* + pε(u, w) + ρε[(w, v) − (u, z)]`.
pub fn liapunov_form_weak(sys: &WeakSystem, params: &WeakLiapunovParams) -> QuadraticForm {
    let n = sys.n();
    let id = DMatrix::identity(n, n);
    let eps = params.epsilon;
    let mut b = energy_builder(sys);
    b.bilinear(Block::V, Block::Z, &sys.a_inv, -eps * sys.lambda1)
        .bilinear(Block::U, Block::W, &id, params.p * eps)
        .bilinear(Block::W, Block::V, &id, params.rho * eps)
        .bilinear(Block::U, Block::Z, &id, -params.rho * eps);
    b.build("H_eps")
}

/// Strictness against `K`; `certified_delta` is the exponential rate of
/// `H_ε` against itself, which degrades as the truncation grows.
pub fn certify_weak(sys: &WeakSystem, params: &WeakLiapunovParams) -> Result<CertificateReport> {
    certify_with(sys, &sys.flow(), &weak_energy_forms(sys).k, params)
}

fn certify_with(
    sys: &WeakSystem,
    flow: &LinearFlow,
    k: &QuadraticForm,
    params: &WeakLiapunovParams,
) -> Result<CertificateReport> {
    let form = liapunov_form_weak(sys, params);
    let (_, margin) = is_positive_definite(&form, 0.0)?;
    let mut report = if margin > 0.0 {
        let gamma = strictness_rate(&form, flow, k)?;
        let delta = strictness_rate(&form, flow, &form)?;
        let mut r = CertificateReport::new(margin, gamma, delta.max(0.0));
        r.note("strictness is measured against K");
        r
    } else {
        let mut r = CertificateReport::new(margin, 0.0, 0.0);
        r.note("H_eps is not positive definite");
        r
    };
    report.p = Some(params.p);
    report.epsilon = Some(params.epsilon);
    Ok(report)
}

/// Maximizes the strictness against `K` over `ε`.
pub fn optimize_weak_epsilon(
    sys: &WeakSystem,
    p: f64,
) -> Result<(WeakLiapunovParams, CertificateReport)> {
    let base = WeakLiapunovParams::new(sys, p, 0.0)?;
    let forms = weak_energy_forms(sys);
    let flow = sys.flow();
    let unit = liapunov_form_weak(sys, &base.with_epsilon(1.0));
    let direction = forms.energy.axpy(-1.0, &unit)?;
    let hi = positivity_limit(&forms.energy, &direction)?.min(1e6) * (1.0 - 1e-9);
    let rate = |eps: f64| {
        let form = liapunov_form_weak(sys, &base.with_epsilon(eps));
        strictness_rate(&form, &flow, &forms.k).ok()
    };
    let (eps, _) = maximize_log(rate, hi * 1e-7, hi, 24, 40)
        .ok_or_else(|| Error::NoCertificate(format!("no admissible eps for p = {p}")))?;
    let params = base.with_epsilon(eps);
    let report = certify_with(sys, &flow, &forms.k, &params)?;
    if !report.valid {
        return Err(Error::NoCertificate(format!(
            "best eps = {eps:e} gives strictness {:e}",
            report.strictness
        )));
    }
    Ok((params, report))
}

#[derive(Debug, Clone)]
pub struct PolynomialDecayStudy {
    pub trace: DecayTrace,
    /// Strictness of `H_ε` against `K`.
    pub gamma: f64,
    /// `sup_{1 ≤ t ≤ T} t K(t) / H_ε(0)`.
    pub c_observed: f64,
    /// `(λ₁ + |c|) / ((λ₁ − |c|) γ)`.
    pub c_theoretical: f64,
    pub bound_holds: bool,
}

/// Simulates with exact exponential steps and records `t K(t)`.
pub fn polynomial_decay_study(
    sys: &WeakSystem,
    params: &WeakLiapunovParams,
    u0: &DVector<f64>,
    horizon: f64,
    dt: f64,
) -> Result<PolynomialDecayStudy> {
    let forms = weak_energy_forms(sys);
    let flow = sys.flow();
    let report = certify_with(sys, &flow, &forms.k, params)?;
    if !report.valid {
        return Err(Error::NoCertificate(format!(
            "weak certificate invalid (margin {:e}, strictness {:e})",
            report.positivity_margin, report.strictness
        )));
    }
    let h = liapunov_form_weak(sys, params);
    let observers = [
        forms.energy.clone(),
        h.clone(),
        forms.k.clone(),
        forms.energy_minus1.clone(),
    ];
    let trace = integrate(&flow, u0, dt, horizon, Method::ExpmStep, &observers)?;
    let h0 = h.evaluate(u0)?;
    if !(h0 > 0.0) {
        return Err(Error::invalid("initial state must be nonzero"));
    }
    let k_series = trace.series("K").expect("K observer");
    let c_observed = trace
        .times
        .iter()
        .zip(k_series)
        .filter(|(t, _)| **t >= 1.0)
        .map(|(t, k)| t * k / h0)
        .fold(0.0, f64::max);
    let lambda1 = sys.lambda1;
    let c = sys.c.abs();
    let c_theoretical = (lambda1 + c) / ((lambda1 - c) * report.strictness);
    Ok(PolynomialDecayStudy {
        trace,
        gamma: report.strictness,
        c_observed,
        bound_holds: c_observed <= c_theoretical * (1.0 + 1e-6),
        c_theoretical,
    })
}

/// `u_k = 1/k²`, `w_k = 1/k`, `v = z = 0`: a fixed datum of finite energy
/// whose truncations converge as `n` grows.
pub fn uniformity_datum(n: usize) -> DVector<f64> {
    let mut u0 = DVector::zeros(4 * n);
    for k in 0..n {
        let kf = (k + 1) as f64;
        u0[k] = 1.0 / (kf * kf);
        u0[2 * n + k] = 1.0 / kf;
    }
    u0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Pass,
    InvalidP,
    NoCertificate,
    BoundViolated,
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Pass => "pass",
            RowStatus::InvalidP => "invalid-p",
            RowStatus::NoCertificate => "no-certificate",
            RowStatus::BoundViolated => "bound-violated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformityRow {
    pub n: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub c_observed: f64,
    pub c_theoretical: f64,
    /// Spectral decrement of the truncation in the energy norm.
    pub spectral_decrement: f64,
    pub status: RowStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformitySettings {
    pub c: f64,
    pub p: f64,
    pub horizon: f64,
    pub dt: f64,
    pub length: f64,
}

impl UniformitySettings {
    pub fn new(c: f64, p: f64) -> Self {
        UniformitySettings {
            c,
            p,
            horizon: DEFAULT_HORIZON,
            dt: DEFAULT_DT,
            length: PI,
        }
    }
}

/// One row of the uniformity table for the `n`-mode Dirichlet truncation.
pub fn uniformity_row(n: usize, settings: &UniformitySettings) -> Result<UniformityRow> {
    let sys = WeakSystem::dirichlet(n, settings.length, settings.c)?;
    let spectral_decrement = sys.flow().spectral_decrement()?;
    let failed = |status| UniformityRow {
        n,
        gamma: f64::NAN,
        epsilon: f64::NAN,
        c_observed: f64::NAN,
        c_theoretical: f64::NAN,
        spectral_decrement,
        status,
    };
    let (params, _) = match optimize_weak_epsilon(&sys, settings.p) {
        Ok(found) => found,
        Err(Error::InvalidP { .. }) => return Ok(failed(RowStatus::InvalidP)),
        Err(Error::NoCertificate(_)) => return Ok(failed(RowStatus::NoCertificate)),
        Err(e) => return Err(e),
    };
    let study = polynomial_decay_study(
        &sys,
        &params,
        &uniformity_datum(n),
        settings.horizon,
        settings.dt,
    )?;
    Ok(UniformityRow {
        n,
        gamma: study.gamma,
        epsilon: params.epsilon,
        c_observed: study.c_observed,
        c_theoretical: study.c_theoretical,
        spectral_decrement,
        status: if study.bound_holds {
            RowStatus::Pass
        } else {
            RowStatus::BoundViolated
        },
    })
}

pub fn uniformity_check(
    mode_counts: &[usize],
    settings: &UniformitySettings,
) -> Result<Vec<UniformityRow>> {
    mode_counts.iter().map(|&n| uniformity_row(n, settings)).collect()
}

/// `max / min` of the observed constants over passing rows.
pub fn uniformity_ratio(rows: &[UniformityRow]) -> Option<f64> {
    let observed: Vec<f64> = rows
        .iter()
        .filter(|r| r.status == RowStatus::Pass)
        .map(|r| r.c_observed)
        .collect();
    if observed.is_empty() {
        return None;
    }
    let max = observed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = observed.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(max / min)
}
