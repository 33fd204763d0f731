//! Galerkin truncations of damped coupled wave, plate and string equations
//! on an interval `(0, L)`, written as [`OperatorPair`]s.
//!
//! Dirichlet problems use the sine basis `φ_k = √(2/L) sin(kπx/L)` with
//! `−∂²φ_k = μ_k φ_k`, `μ_k = (kπ/L)²`. The periodic string uses real
//! Fourier pairs with zero mean.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{is_positive_definite, Block, FormBuilder, QuadraticForm};
use crate::numerics::sym_eig;
use crate::strong::{base_energy_form, check_conditions, OperatorPair};

const PANEL_NODES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscretizationSpec {
    pub n_modes: usize,
    pub length: f64,
    pub quadrature_nodes: usize,
}

impl DiscretizationSpec {
    /// `16 n` quadrature nodes.
    pub fn new(n_modes: usize, length: f64) -> Result<Self> {
        Self::with_nodes(n_modes, length, 16 * n_modes)
    }

    pub fn with_nodes(n_modes: usize, length: f64, quadrature_nodes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::invalid("need at least one mode"));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid(format!("domain length must be positive, got {length}")));
        }
        if quadrature_nodes < 2 * n_modes {
            return Err(Error::invalid(format!(
                "need at least {} quadrature nodes, got {quadrature_nodes}",
                2 * n_modes
            )));
        }
        Ok(DiscretizationSpec {
            n_modes,
            length,
            quadrature_nodes,
        })
    }

    /// Same domain and node density with a different mode count.
    pub fn with_modes(&self, n_modes: usize) -> Result<Self> {
        let per_mode = (self.quadrature_nodes as f64 / self.n_modes as f64).ceil() as usize;
        Self::with_nodes(n_modes, self.length, per_mode.max(2) * n_modes)
    }

    /// Dirichlet eigenvalues `μ_k = (kπ/L)²`, `k = 1..=n`.
    pub fn dirichlet_eigenvalues(&self) -> Vec<f64> {
        (1..=self.n_modes)
            .map(|k| (k as f64 * PI / self.length).powi(2))
            .collect()
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        nodes[i] = -x;
        weights[i] = 2.0 / ((1.0 - x * x) * d * d);
    }
    (nodes, weights)
}

/// `P_m(x)` and `P_m'(x)` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule on `[a, b]` with panels of ten nodes and at least
/// `total` nodes overall.
pub fn composite_gauss_legendre(a: f64, b: f64, total: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = total.div_ceil(PANEL_NODES).max(1);
    let (x, w) = gauss_legendre(PANEL_NODES);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * PANEL_NODES);
    let mut weights = Vec::with_capacity(panels * PANEL_NODES);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + 0.5 * h * xi);
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// `(M_f)_{jk} = ∫₀ᴸ f φ_j φ_k dx` in the sine basis.
pub fn multiplication_matrix(spec: &DiscretizationSpec, f: &dyn Fn(f64) -> f64) -> DMatrix<f64> {
    let n = spec.n_modes;
    let l = spec.length;
    let (x, w) = composite_gauss_legendre(0.0, l, spec.quadrature_nodes);
    let norm = 2.0 / l;
    let mut m = DMatrix::zeros(n, n);
    for (xi, wi) in x.iter().zip(&w) {
        let weight = wi * f(*xi) * norm;
        let phi: Vec<f64> = (1..=n).map(|k| (k as f64 * PI * xi / l).sin()).collect();
        for j in 0..n {
            for k in j..n {
                m[(j, k)] += weight * phi[j] * phi[k];
            }
        }
    }
    for j in 0..n {
        for k in 0..j {
            m[(j, k)] = m[(k, j)];
        }
    }
    m
}

fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(values))
}

/// `u'' + u' + λu + ζv = 0`, `v'' + λv + ζ̄u = 0` with `ζ = c + id`, in real
/// coordinates `(Re, Im)`.
pub fn complex_scalar(lambda: f64, c: f64, d: f64) -> Result<OperatorPair> {
    if !(lambda > 0.0) || !lambda.is_finite() || !c.is_finite() || !d.is_finite() {
        return Err(Error::invalid(format!("need finite lambda > 0, got {lambda}")));
    }
    let modulus = c.hypot(d);
    if modulus == 0.0 {
        return Err(Error::InvalidCoupling("need c + id != 0".into()));
    }
    if modulus >= lambda {
        return Err(Error::CouplingTooStrong {
            message: format!("|c + id| = {modulus} must be below lambda = {lambda}"),
            threshold: lambda,
        });
    }
    let a = DMatrix::identity(2, 2) * lambda;
    let coupling = DMatrix::from_row_slice(2, 2, &[c, -d, d, c]);
    OperatorPair::new(a, coupling)
}

/// Damped wave equation with coupling `−γΔv`: `A = diag μ`, `C = γA`.
pub fn wave_strong(spec: &DiscretizationSpec, gamma: f64) -> Result<OperatorPair> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("wave coupling needs 0 < gamma < 1, got {gamma}")));
    }
    let a = diag(&spec.dirichlet_eigenvalues());
    let c = &a * gamma;
    OperatorPair::new(a, c)
}

/// Hinged plate with coupling `−γΔ`: `A = diag μ²`, `C = γ diag μ`.
pub fn plate_structural(spec: &DiscretizationSpec, gamma: f64) -> Result<OperatorPair> {
    let mu = spec.dirichlet_eigenvalues();
    check_plate_gamma(gamma, mu[0])?;
    let a = diag(&mu.iter().map(|m| m * m).collect::<Vec<_>>());
    let c = diag(&mu) * gamma;
    OperatorPair::new(a, c)
}

fn check_plate_gamma(gamma: f64, mu1: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < mu1) {
        return Err(Error::invalid(format!(
            "plate coupling needs gamma in (0, lambda_1) = (0, {mu1}), got {gamma}"
        )));
    }
    Ok(())
}

/// Matrix of `∂_x` on `span{sin(κ_k x), cos(κ_k x)}`, `κ_k = 2πk/L`, with
/// the pair for each `k` stored as (sin, cos).
fn periodic_derivative(spec: &DiscretizationSpec) -> (DMatrix<f64>, Vec<f64>) {
    let n = spec.n_modes;
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    let mut nu = Vec::with_capacity(2 * n);
    for k in 0..n {
        let kappa = 2.0 * PI * (k + 1) as f64 / spec.length;
        d[(2 * k, 2 * k + 1)] = -kappa;
        d[(2 * k + 1, 2 * k)] = kappa;
        nu.push(kappa * kappa);
        nu.push(kappa * kappa);
    }
    (d, nu)
}

fn string_matrices(spec: &DiscretizationSpec, gamma: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (d, nu) = periodic_derivative(spec);
    (diag(&nu), d * gamma)
}

/// Largest `|γ|` for which the string's `H₀` stays positive definite,
/// located by bisection.
pub fn string_positivity_threshold(spec: &DiscretizationSpec) -> Result<f64> {
    let definite = |gamma: f64| -> Result<bool> {
        let (a, c) = string_matrices(spec, gamma);
        let pair = OperatorPair::new(a, c)?;
        Ok(is_positive_definite(&base_energy_form(&pair), 0.0)?.0)
    };
    let mut lo = 0.0;
    let mut hi = 1.0 / spec.length.max(1e-300);
    while definite(hi)? {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if definite(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Periodic string `u'' − u_xx + u' + γv_x = 0`, `v'' − v_xx − γu_x = 0` on
/// zero-mean functions; `n_modes` counts frequency pairs, so the truncation
/// has dimension `2 n_modes`.
pub fn string_periodic(spec: &DiscretizationSpec, gamma: f64) -> Result<OperatorPair> {
    if gamma == 0.0 || !gamma.is_finite() {
        return Err(Error::invalid(format!("string coupling needs gamma != 0, got {gamma}")));
    }
    let (a, c) = string_matrices(spec, gamma);
    let pair = OperatorPair::new(a, c)?;
    let (definite, _) = is_positive_definite(&base_energy_form(&pair), 0.0)?;
    if !definite {
        return Err(Error::CouplingTooStrong {
            message: format!("H0 is not positive definite at gamma = {gamma}"),
            threshold: string_positivity_threshold(spec)?,
        });
    }
    Ok(pair)
}

/// The string functional with its printed coefficients,
///
/// ```text
/// ½∫(u_t² + v_t² + u² + v² + u_x² + v_x²) + γ∫u v_x
///     + ε∫(3u u_t − v v_t) + (2ε/γ)∫(u_x v_t − v_x u_t).
/// ```
pub fn string_displayed_liapunov_form(
    spec: &DiscretizationSpec,
    gamma: f64,
    eps: f64,
) -> Result<QuadraticForm> {
    if gamma == 0.0 || !gamma.is_finite() || !(eps >= 0.0) {
        return Err(Error::invalid(format!("need gamma != 0, eps >= 0; got {gamma}, {eps}")));
    }
    let (d, nu) = periodic_derivative(spec);
    let m = 2 * spec.n_modes;
    let id = DMatrix::identity(m, m);
    let stiffness = diag(&nu) + &id;
    let mut b = FormBuilder::new(m);
    b.square(Block::U, &stiffness, 0.5)
        .square(Block::V, &stiffness, 0.5)
        .square(Block::W, &id, 0.5)
        .square(Block::Z, &id, 0.5)
        .bilinear(Block::U, Block::V, &d, gamma)
        .bilinear(Block::U, Block::W, &id, 3.0 * eps)
        .bilinear(Block::V, Block::Z, &id, -eps)
        .bilinear(Block::Z, Block::U, &d, 2.0 * eps / gamma)
        .bilinear(Block::W, Block::V, &d, -2.0 * eps / gamma);
    Ok(b.build("H_eps_displayed"))
}

/// `γ` up to which `‖C‖_{V,V'} < 1` for `C = γB`.
fn admissible_gamma(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let unit = OperatorPair::new(a.clone(), b.clone())?;
    Ok(1.0 / unit.norm_c())
}

fn require_spd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let min = sym_eig(m)?[0];
    if !(min > 0.0) {
        return Err(Error::invalid(format!(
            "{what} is not positive definite (smallest eigenvalue {min:e})"
        )));
    }
    Ok(())
}

/// `A = −∂² + a(x)`, `C = γ(−∂² + b(x))` with Dirichlet conditions.
pub fn wave_potentials(
    spec: &DiscretizationSpec,
    gamma: f64,
    a: &dyn Fn(f64) -> f64,
    b: &dyn Fn(f64) -> f64,
) -> Result<OperatorPair> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(format!("need gamma > 0, got {gamma}")));
    }
    let laplace = diag(&spec.dirichlet_eigenvalues());
    let a_mat = &laplace + multiplication_matrix(spec, a);
    let b_mat = &laplace + multiplication_matrix(spec, b);
    require_spd(&a_mat, "-d2 + a")?;
    require_spd(&b_mat, "-d2 + b")?;
    let threshold = admissible_gamma(&a_mat, &b_mat)?;
    if !(gamma < threshold) {
        return Err(Error::CouplingTooStrong {
            message: format!("||C||_(V,V') >= 1 at gamma = {gamma}"),
            threshold,
        });
    }
    OperatorPair::new(a_mat, b_mat * gamma)
}

/// Hinged plate `A = ∂⁴ + m(x)`, `C = −γ∂²`.
pub fn plate_multiplication(
    spec: &DiscretizationSpec,
    gamma: f64,
    m: &dyn Fn(f64) -> f64,
) -> Result<OperatorPair> {
    let mu = spec.dirichlet_eigenvalues();
    check_plate_gamma(gamma, mu[0])?;
    let (x, _) = composite_gauss_legendre(0.0, spec.length, spec.quadrature_nodes);
    if let Some(bad) = x.iter().find(|&&xi| m(xi) < 0.0) {
        return Err(Error::invalid(format!("m must be nonnegative, m({bad}) < 0")));
    }
    let a = diag(&mu.iter().map(|v| v * v).collect::<Vec<_>>()) + multiplication_matrix(spec, m);
    let pair = OperatorPair::new(a, diag(&mu) * gamma)?;
    let report = check_conditions(&pair);
    if !report.passes {
        return Err(Error::CouplingTooStrong {
            message: format!("||C||_(V,V') = {} >= 1", report.norm_c_v_vprime),
            threshold: gamma / report.norm_c_v_vprime,
        });
    }
    Ok(pair)
}

/// Largest entry of `(AC⁻¹ − C⁻¹A) − (1/γ)(M D⁻¹ − D⁻¹M)` with
/// `D = diag μ`.
pub fn plate_commutator_residual(
    spec: &DiscretizationSpec,
    gamma: f64,
    m: &dyn Fn(f64) -> f64,
) -> Result<f64> {
    let pair = plate_multiplication(spec, gamma, m)?;
    let mm = multiplication_matrix(spec, m);
    let d_inv = diag(&spec.dirichlet_eigenvalues().iter().map(|v| 1.0 / v).collect::<Vec<_>>());
    let lhs = pair.a_c_inv() - pair.c_inv_a();
    let rhs = (&mm * &d_inv - &d_inv * &mm) / gamma;
    Ok((lhs - rhs).amax())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i18: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((i18 - 2.0 / 19.0).abs() < 1e-14);
        let (x, w) = composite_gauss_legendre(0.0, PI, 40);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.sin()).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn dirichlet_eigenvalues_on_pi() {
        let spec = DiscretizationSpec::new(4, PI).unwrap();
        let mu = spec.dirichlet_eigenvalues();
        for (k, m) in mu.iter().enumerate() {
            assert!((m - ((k + 1) * (k + 1)) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(DiscretizationSpec::with_nodes(8, 1.0, 15).is_err());
        assert!(DiscretizationSpec::new(0, 1.0).is_err());
        assert!(DiscretizationSpec::new(3, -1.0).is_err());
    }

    #[test]
    fn constant_potential_is_scaled_identity() {
        let spec = DiscretizationSpec::new(6, 2.0).unwrap();
        let m = multiplication_matrix(&spec, &|_| 3.0);
        assert!((m - DMatrix::identity(6, 6) * 3.0).amax() < 1e-13);
    }

    #[test]
    fn complex_scalar_structure() {
        let pair = complex_scalar(1.0, 0.0, 0.5).unwrap();
        assert_eq!(pair.c_adjoint(), &(-pair.c()));
        let ctc = pair.c_adjoint() * pair.c();
        assert!((ctc - DMatrix::identity(2, 2) * 0.25).amax() < 1e-16);
        assert!(matches!(
            complex_scalar(1.0, 0.8, 0.8),
            Err(Error::CouplingTooStrong { .. })
        ));
    }

    #[test]
    fn wave_and_plate_norms() {
        let spec = DiscretizationSpec::new(8, PI).unwrap();
        let r = check_conditions(&wave_strong(&spec, 0.5).unwrap());
        assert!((r.norm_c_v_vprime - 0.5).abs() < 1e-12);
        assert!(r.norm_commutator_d < 1e-12);
        let spec = DiscretizationSpec::new(8, 2.0).unwrap();
        let mu1 = (PI / 2.0).powi(2);
        let r = check_conditions(&plate_structural(&spec, 0.5).unwrap());
        assert!((r.norm_c_v_vprime - 0.5 / mu1).abs() < 1e-12);
        assert!(wave_strong(&spec, 1.0).is_err());
        assert!(plate_structural(&spec, mu1).is_err());
    }

    #[test]
    fn string_structure_and_threshold() {
        let spec = DiscretizationSpec::new(4, 2.0 * PI).unwrap();
        let pair = string_periodic(&spec, 0.3).unwrap();
        assert_eq!(pair.c_adjoint(), &(-pair.c()));
        let r = check_conditions(&pair);
        assert!((r.norm_c_v_vprime - 0.3).abs() < 1e-12);
        let threshold = string_positivity_threshold(&spec).unwrap();
        assert!((threshold - 1.0).abs() < 1e-12);
        assert!(matches!(
            string_periodic(&spec, 1.5),
            Err(Error::CouplingTooStrong { .. })
        ));
    }

    #[test]
    fn potentials_reduce_to_plain_examples() {
        let spec = DiscretizationSpec::new(6, PI).unwrap();
        let wave = wave_strong(&spec, 0.4).unwrap();
        let pot = wave_potentials(&spec, 0.4, &|_| 0.0, &|_| 0.0).unwrap();
        assert_eq!(wave.a(), pot.a());
        assert_eq!(wave.c(), pot.c());
        let plate = plate_structural(&spec, 0.5).unwrap();
        let mult = plate_multiplication(&spec, 0.5, &|_| 0.0).unwrap();
        assert_eq!(plate.a(), mult.a());
        assert_eq!(plate.c(), mult.c());
    }

    #[test]
    fn potential_threshold_reported() {
        let spec = DiscretizationSpec::new(6, PI).unwrap();
        match wave_potentials(&spec, 1.5, &|x| x.sin(), &|_| 0.0) {
            Err(Error::CouplingTooStrong { threshold, .. }) => {
                assert!(threshold > 1.0 && threshold < 1.5);
            }
            other => panic!("expected threshold error, got {other:?}"),
        }
    }
}
