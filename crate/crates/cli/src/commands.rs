use liapform::forms::{CertificateReport, QuadraticForm};
use liapform::numerics::{integrate_with, poly_roots_with};
use liapform::scalar::{self, check_root_relations, real_root_onset};
use liapform::strong::{self, check_conditions, generator, ConditionReport, OperatorPair};
use liapform::weak::{self, UniformitySettings, WeakLiapunovParams, WeakSystem};
use liapform::{LinearFlow, Method, ScalarParams, Tolerances};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::args::{
    CLaw, CertifyArgs, Example, MethodArg, PdeArgs, RootsArgs, ScanArgs, SimulateArgs, Variant,
    WeakArgs,
};
use crate::error::{CliError, CliResult};
use crate::report::{Cell, Report};
use crate::systems::{weak_length, SystemSpec};

/// A report plus the failure, if any, that decides the exit code after the
/// report has been written.
pub struct Outcome {
    pub report: Report,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(report: Report) -> Self {
        Outcome {
            report,
            failure: None,
        }
    }
}

pub struct Context {
    pub tolerances: Tolerances,
    pub pool: ThreadPool,
}

fn required(v: Option<f64>, name: &str) -> CliResult<f64> {
    v.ok_or_else(|| CliError::invalid(format!("missing --{name}")))
}

const ROOTS_HEADER: &[&str] = &[
    "index", "re", "im", "rho", "res_imag", "res_a2", "decrement", "has_real_root",
];

pub fn roots(args: &RootsArgs, ctx: &Context) -> CliResult<Outcome> {
    let lambda = required(args.lambda, "lambda")?;
    let c = required(args.c, "c")?;
    let params = ScalarParams::new(lambda, c)?;
    let roots = poly_roots_with(&scalar::char_poly(&params), &ctx.tolerances)?;
    let decrement = roots.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);
    let has_real_root = real_root_onset(lambda, c.abs())?.has_real_root;
    let mut report = Report::table(ROOTS_HEADER);
    for (i, z) in roots.iter().enumerate() {
        let rel = check_root_relations(&params, *z);
        report.push_row(vec![
            i.into(),
            z.re.into(),
            z.im.into(),
            (-z.re).into(),
            rel.res_imag.into(),
            rel.res_a2.into(),
            decrement.into(),
            has_real_root.into(),
        ]);
    }
    Ok(Outcome::ok(report))
}

const SCAN_HEADER: &[&str] = &[
    "lambda",
    "c",
    "spectral_decrement",
    "certified_delta",
    "certified_norm_rate",
    "has_real_root",
    "certificate_valid",
];

/// `n ≥ 2` points with exact endpoints.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => lo + (hi - lo) * i as f64 / (n - 1) as f64,
        })
        .collect()
}

pub fn scan(args: &ScanArgs, ctx: &Context) -> CliResult<Outcome> {
    let lambda_min = args.lambda_min.unwrap_or(0.5);
    let lambda_max = args.lambda_max.unwrap_or(50.0);
    let nl = args.lambda_count.unwrap_or(10);
    let nc = args.c_count.unwrap_or(10);
    let law = args.c_law.unwrap_or(CLaw::Fraction);
    let c_min = args.c_min.unwrap_or(0.05);
    let c_max = args.c_max.unwrap_or(0.95);
    if nl < 2 || nc < 2 {
        return Err(CliError::invalid(format!("grid must be at least 2x2, got {nl}x{nc}")));
    }
    if !(0.0 < lambda_min && lambda_min <= lambda_max && lambda_max.is_finite()) {
        return Err(CliError::invalid("need 0 < lambda_min <= lambda_max"));
    }
    if !(c_min <= c_max) || !c_min.is_finite() || !c_max.is_finite() {
        return Err(CliError::invalid("need finite c_min <= c_max"));
    }
    let mut lambdas: Vec<f64> = linspace(lambda_min.ln(), lambda_max.ln(), nl)
        .into_iter()
        .map(f64::exp)
        .collect();
    lambdas[0] = lambda_min;
    lambdas[nl - 1] = lambda_max;
    let cs = linspace(c_min, c_max, nc);
    let mut grid = Vec::with_capacity(nl * nc);
    for &lambda in &lambdas {
        for &x in &cs {
            let c = match law {
                CLaw::Fraction => x * lambda,
                CLaw::Power => lambda.powf(x),
            };
            grid.push(ScalarParams::new(lambda, c)?);
        }
    }
    let points: Vec<_> = ctx
        .pool
        .install(|| grid.par_iter().map(scalar::scan_point).collect());
    let mut report = Report::table(SCAN_HEADER);
    for point in points {
        let pt = point?;
        if pt.certified_norm_rate > pt.spectral_decrement + 1e-8 {
            return Err(CliError::Numerical(format!(
                "certified rate {:e} exceeds spectral decrement {:e} at lambda = {}, c = {}",
                pt.certified_norm_rate, pt.spectral_decrement, pt.lambda, pt.c
            )));
        }
        report.push_row(vec![
            pt.lambda.into(),
            pt.c.into(),
            pt.spectral_decrement.into(),
            pt.certified_delta.into(),
            pt.certified_norm_rate.into(),
            pt.has_real_root.into(),
            pt.certificate_valid.into(),
        ]);
    }
    Ok(Outcome::ok(report))
}

fn condition_fields(report: &mut Report, c: &ConditionReport) {
    report.field("norm_c_v_vprime", c.norm_c_v_vprime);
    report.field("norm_cinv_h_v", c.norm_cinv_h_v);
    report.field("norm_cinv_vprime_h", c.norm_cinv_vprime_h);
    report.field("norm_commutator_d", c.norm_commutator_d);
    report.field("c_condition_number", c.c_condition_number);
    report.field("conditions_pass", c.passes);
}

fn certificate_fields(report: &mut Report, cert: &CertificateReport) {
    report.field("p", cert.p);
    report.field("epsilon", cert.epsilon);
    report.field("positivity_margin", cert.positivity_margin);
    report.field("strictness", cert.strictness);
    report.field("certified_delta", cert.certified_delta);
    report.field("certified_norm_rate", cert.norm_rate());
    report.field("valid", cert.valid);
    report.field("bound_slack", cert.bound_slack);
}

/// Certificate for `H_ε` on a strong pair; an explicit `ε` is certified as
/// given, otherwise the best `ε` is searched.
fn strong_certificate(
    pair: &OperatorPair,
    spec: &SystemSpec,
) -> CliResult<Result<CertificateReport, CliError>> {
    let p = spec.p.unwrap_or(strong::DEFAULT_P);
    match spec.epsilon {
        Some(eps) => Ok(Ok(strong::certify_strong(pair, p, eps)?)),
        None => match strong::auto_epsilon(pair, p) {
            Ok((_, cert)) => Ok(Ok(cert)),
            Err(e) if e.is_certification() => Ok(Err(e.into())),
            Err(e) => Err(e.into()),
        },
    }
}

fn strong_summary(
    ex: Example,
    pair: &OperatorPair,
    spec: &SystemSpec,
) -> CliResult<(Report, Option<CertificateReport>, Option<CliError>)> {
    let conditions = check_conditions(pair);
    let mut report = Report::Fields(Vec::new());
    report.field("variant", "strong");
    report.field("example", ex.as_str());
    report.field("n", pair.n());
    report.field("dimension", 4 * pair.n());
    report.field("spectral_decrement", generator(pair).spectral_decrement()?);
    condition_fields(&mut report, &conditions);
    let (cert, failure) = match strong_certificate(pair, spec)? {
        Ok(cert) => {
            let failure = (!cert.valid).then(|| {
                CliError::Certification(format!(
                    "no strict certificate (margin {:e}, strictness {:e})",
                    cert.positivity_margin, cert.strictness
                ))
            });
            certificate_fields(&mut report, &cert);
            report.field("notes", cert.notes.join("; "));
            (Some(cert), failure)
        }
        Err(e) => {
            report.field("valid", false);
            report.field("notes", e.to_string());
            (None, Some(e))
        }
    };
    Ok((report, cert, failure))
}

fn weak_params(sys: &WeakSystem, spec: &SystemSpec) -> CliResult<(WeakLiapunovParams, CertificateReport)> {
    let p = spec.p.unwrap_or(3.0);
    match spec.epsilon {
        Some(eps) => {
            let params = WeakLiapunovParams::new(sys, p, eps)?;
            Ok((params, weak::certify_weak(sys, &params)?))
        }
        None => Ok(weak::optimize_weak_epsilon(sys, p)?),
    }
}

fn certify_weak_report(spec: &SystemSpec) -> CliResult<Outcome> {
    let sys = spec.build_weak()?;
    let (params, cert) = weak_params(&sys, spec)?;
    let c = sys.c().abs();
    let lambda1 = sys.lambda1();
    let mut report = Report::Fields(Vec::new());
    report.field("variant", "weak");
    report.field("n", sys.n());
    report.field("lambda1", lambda1);
    report.field("c", sys.c());
    report.field("p_lower_bound", sys.p_lower_bound());
    report.field("rho", params.rho);
    report.field("spectral_decrement", sys.flow().spectral_decrement()?);
    certificate_fields(&mut report, &cert);
    report.field(
        "c_theoretical",
        (lambda1 + c) / ((lambda1 - c) * cert.strictness),
    );
    report.field("notes", cert.notes.join("; "));
    let failure = (!cert.valid).then(|| {
        CliError::Certification(format!(
            "no strict certificate (margin {:e}, strictness {:e})",
            cert.positivity_margin, cert.strictness
        ))
    });
    Ok(Outcome { report, failure })
}

pub fn certify(args: &CertifyArgs, _ctx: &Context) -> CliResult<Outcome> {
    let spec = args.system();
    let variant = args.variant.unwrap_or(if spec.example == Some(Example::Weak) {
        Variant::Weak
    } else {
        Variant::Strong
    });
    match variant {
        Variant::Weak => {
            if spec.example.is_some_and(|e| e != Example::Weak) {
                return Err(CliError::invalid("variant weak only applies to the weak example"));
            }
            certify_weak_report(&spec)
        }
        Variant::Strong => {
            let ex = spec.example_or(Example::Scalar);
            let pair = spec.build_strong(ex)?;
            let (report, _, failure) = strong_summary(ex, &pair, &spec)?;
            Ok(Outcome { report, failure })
        }
    }
}

fn initial_state(u0: Option<&Vec<f64>>, seed: u64, dim: usize) -> CliResult<DVector<f64>> {
    match u0 {
        Some(v) if v.len() != dim => Err(CliError::invalid(format!(
            "u0 has {} entries, the state has {dim}",
            v.len()
        ))),
        Some(v) => Ok(DVector::from_column_slice(v)),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0)))
        }
    }
}

struct SimulationSetup {
    flow: LinearFlow,
    observers: Vec<QuadraticForm>,
    header: &'static [&'static str],
}

fn simulation_setup(spec: &SystemSpec) -> CliResult<SimulationSetup> {
    let ex = spec.example_or(Example::Scalar);
    if ex == Example::Weak {
        let sys = spec.build_weak()?;
        let (params, _) = weak_params(&sys, spec)?;
        let forms = weak::weak_energy_forms(&sys);
        return Ok(SimulationSetup {
            flow: sys.flow(),
            observers: vec![
                forms.energy.with_label("E"),
                weak::liapunov_form_weak(&sys, &params).with_label("H_eps"),
                forms.k.with_label("K"),
            ],
            header: &["t", "E", "H_eps", "K", "norm_sq"],
        });
    }
    let pair = spec.build_strong(ex)?;
    let p = spec.p.unwrap_or(strong::DEFAULT_P);
    let eps = match spec.epsilon {
        Some(eps) => eps,
        None => strong::auto_epsilon(&pair, p)?.0,
    };
    Ok(SimulationSetup {
        flow: generator(&pair),
        observers: vec![
            strong::base_energy_form(&pair).with_label("E"),
            strong::liapunov_form_strong(&pair, p, eps)?.with_label("H_eps"),
        ],
        header: &["t", "E", "H_eps", "norm_sq"],
    })
}

pub fn simulate(args: &SimulateArgs, ctx: &Context) -> CliResult<Outcome> {
    let spec = args.system();
    let setup = simulation_setup(&spec)?;
    let u0 = initial_state(args.u0.as_ref(), args.seed.unwrap_or(0), setup.flow.dim())?;
    let method: Method = args.method.unwrap_or(MethodArg::ExpmStep).into();
    let trace = integrate_with(
        &setup.flow,
        &u0,
        args.dt.unwrap_or(0.1),
        args.horizon.unwrap_or(50.0),
        method,
        &setup.observers,
        &ctx.tolerances,
    )?;
    let series: Vec<&[f64]> = setup
        .observers
        .iter()
        .map(|q| trace.series(q.label()).expect("observer"))
        .collect();
    let mut report = Report::table(setup.header);
    for (i, t) in trace.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(*t).into()];
        row.extend(series.iter().map(|s| Cell::from(s[i])));
        row.push(trace.states[i].norm_squared().into());
        report.push_row(row);
    }
    let energy = series[0];
    let failure = energy
        .windows(2)
        .zip(&trace.times[1..])
        .find(|(w, _)| w[1] > w[0] + 1e-12 * energy[0].abs())
        .map(|(w, t)| {
            CliError::Numerical(format!(
                "energy increased from {:e} to {:e} at t = {t}",
                w[0], w[1]
            ))
        });
    Ok(Outcome { report, failure })
}

/// Least-squares slope of `ln y` against `t`.
fn log_slope(t: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    sxy / sxx
}

pub fn pde(args: &PdeArgs, ctx: &Context) -> CliResult<Outcome> {
    let spec = args.system();
    let ex = match spec.example {
        None => return Err(CliError::invalid("missing --example")),
        Some(Example::Scalar | Example::Weak) => {
            return Err(CliError::invalid(format!(
                "unknown example '{}'; expected complex, wave, plate, string, wave-potential or plate-multiplication",
                spec.example.unwrap().as_str()
            )))
        }
        Some(ex) => ex,
    };
    let pair = spec.build_strong(ex)?;
    let (mut report, cert, failure) = strong_summary(ex, &pair, &spec)?;
    if let Some(d) = spec.discretization(ex)? {
        report.field("modes", d.n_modes);
        report.field("L", d.length);
        report.field("gamma", spec.gamma(ex));
    }
    let Some(cert) = cert.filter(|c| c.valid) else {
        return Ok(Outcome { report, failure });
    };
    let p = cert.p.expect("certified p");
    let eps = cert.epsilon.expect("certified eps");
    let h = strong::liapunov_form_strong(&pair, p, eps)?.with_label("H_eps");
    let flow = generator(&pair);
    let u0 = initial_state(None, args.seed.unwrap_or(0), flow.dim())?;
    let trace = integrate_with(
        &flow,
        &u0,
        args.dt.unwrap_or(0.1),
        args.horizon.unwrap_or(50.0),
        Method::ExpmStep,
        std::slice::from_ref(&h),
        &ctx.tolerances,
    )?;
    let series = trace.series("H_eps").expect("observer");
    let slope = log_slope(&trace.times, series);
    let delta = cert.certified_delta;
    let worst = trace
        .times
        .iter()
        .zip(series)
        .map(|(t, v)| v / (series[0] * (-delta * t).exp()))
        .fold(0.0, f64::max);
    report.field("fitted_log_slope", slope);
    report.field("minus_certified_delta", -delta);
    report.field("slope_within_bound", slope <= -delta);
    report.field("max_decay_ratio", worst);
    let failure = (worst > 1.0 + 1e-6).then(|| {
        CliError::Numerical(format!(
            "simulated H_eps exceeds H_eps(0) exp(-delta t) by factor {worst}"
        ))
    });
    Ok(Outcome { report, failure })
}

const WEAK_HEADER: &[&str] = &[
    "n",
    "gamma",
    "epsilon",
    "c_observed",
    "c_theoretical",
    "spectral_decrement",
    "status",
];

pub fn weak(args: &WeakArgs, ctx: &Context) -> CliResult<Outcome> {
    let modes = args.modes.clone().unwrap_or_else(|| vec![8, 16, 32, 64]);
    if modes.is_empty() || modes.contains(&0) {
        return Err(CliError::invalid("modes must be a nonempty list of positive counts"));
    }
    let mut settings = UniformitySettings::new(args.c.unwrap_or(0.2), args.p.unwrap_or(3.0));
    settings.horizon = args.horizon.unwrap_or(settings.horizon);
    settings.dt = args.dt.unwrap_or(settings.dt);
    settings.length = weak_length(args.length, args.lambda1)?;
    let rows: Vec<_> = ctx.pool.install(|| {
        modes
            .par_iter()
            .map(|&n| weak::uniformity_row(n, &settings))
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut report = Report::table(WEAK_HEADER);
    for r in &rows {
        report.push_row(vec![
            r.n.into(),
            r.gamma.into(),
            r.epsilon.into(),
            r.c_observed.into(),
            r.c_theoretical.into(),
            r.spectral_decrement.into(),
            r.status.as_str().into(),
        ]);
    }
    let failure = rows
        .iter()
        .all(|r| r.status != weak::RowStatus::Pass)
        .then(|| {
            let lower = WeakSystem::dirichlet(1, settings.length, settings.c)
                .map(|s| s.p_lower_bound())
                .unwrap_or(f64::NAN);
            CliError::Certification(format!(
                "no row certified (p = {}, admissible p > {lower}; statuses: {})",
                settings.p,
                rows.iter().map(|r| r.status.as_str()).collect::<Vec<_>>().join(", ")
            ))
        });
    Ok(Outcome { report, failure })
}
