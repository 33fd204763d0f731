use liapform::forms::{
    gram_liapunov, is_positive_definite, lie_derivative, strictness_rate, LinearFlow,
    QuadraticForm,
};
use liapform::numerics::{
    expm, gen_eig_min, integrate, poly_roots, sym_eig, Method, Polynomial,
};
use liapform::scalar::{self, check_root_relations, decrement_spectral, roots, ScalarParams};
use liapform::strong::{self, generator, OperatorPair};
use liapform::weak::{self, WeakSystem};
use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;

fn matrix(n: usize, range: std::ops::Range<f64>) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(range, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v))
}

fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    matrix(n, -1.0..1.0).prop_map(move |b| &b * b.transpose() + DMatrix::identity(n, n))
}

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    matrix(n, -2.0..2.0).prop_map(|b| (&b + b.transpose()) * 0.5)
}

fn scalar_params() -> impl Strategy<Value = ScalarParams> {
    (0.05f64..200.0, 0.01f64..0.99, prop::bool::ANY).prop_map(|(l, f, neg)| {
        ScalarParams::new(l, if neg { -f * l } else { f * l }).unwrap()
    })
}

fn hurwitz(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    // Shift a random matrix so that its spectral abscissa is at most -0.1.
    matrix(n, -1.0..1.0).prop_map(move |m| {
        let radius = m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::MIN, f64::max);
        m - DMatrix::identity(n, n) * (radius + 0.1 + 0.5)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn root_sum_and_product(coeffs in proptest::collection::vec(-3.0f64..3.0, 4)) {
        let mut all = vec![1.0];
        all.extend(coeffs);
        let p = Polynomial::new(all.clone()).unwrap();
        let r = poly_roots(&p).unwrap();
        let sum: Complex<f64> = r.iter().sum();
        let product = r.iter().fold(Complex::new(1.0, 0.0), |acc, z| acc * z);
        prop_assert!((sum.re + all[1]).abs() < 1e-9 && sum.im.abs() < 1e-9);
        prop_assert!((product.re - all[4]).abs() < 1e-9 && product.im.abs() < 1e-9);
    }

    #[test]
    fn trace_is_eigenvalue_sum(m in symmetric(7)) {
        let eigs = sym_eig(&m).unwrap();
        let sum: f64 = eigs.iter().sum();
        prop_assert!((sum - m.trace()).abs() <= 1e-10 * (1.0 + m.trace().abs()));
    }

    #[test]
    fn generalized_eigenvalues_scale(l in symmetric(5), r in spd(5), alpha in 0.01f64..100.0) {
        let base = gen_eig_min(&l, &r).unwrap();
        let scaled = gen_eig_min(&(&l * alpha), &r).unwrap();
        prop_assert!((scaled - alpha * base).abs() <= 1e-10 * (1.0 + (alpha * base).abs()));
    }

    #[test]
    fn semigroup_property(s in hurwitz(4), t1 in 0.1f64..2.0, t2 in 0.1f64..2.0) {
        let flow = LinearFlow::new(s.clone()).unwrap();
        let u0 = DVector::from_vec(vec![1.0, -0.3, 0.2, 0.7]);
        let steps = 10usize;
        let dt = t1 / steps as f64;
        let trace = integrate(&flow, &u0, dt, t1, Method::ExpmStep, &[]).unwrap();
        let at_t1 = trace.states.last().unwrap().clone();
        let direct = expm(&s, t1 + t2).unwrap() * &u0;
        let composed = expm(&s, t2).unwrap() * at_t1;
        prop_assert!((direct - composed).norm() <= 1e-10 * (1.0 + u0.norm()));
    }

    #[test]
    fn lie_derivative_is_linear(q1 in symmetric(4), q2 in symmetric(4), s in matrix(4, -1.0..1.0), alpha in -3.0f64..3.0) {
        let flow = LinearFlow::new(s).unwrap();
        let f1 = QuadraticForm::new(q1, "q1").unwrap();
        let f2 = QuadraticForm::new(q2, "q2").unwrap();
        let combined = f1.axpy(alpha, &f2).unwrap();
        let lhs = lie_derivative(&combined, &flow).unwrap();
        let rhs = lie_derivative(&f1, &flow).unwrap().axpy(alpha, &lie_derivative(&f2, &flow).unwrap()).unwrap();
        prop_assert!((lhs.matrix() - rhs.matrix()).amax() <= 1e-13 * (1.0 + lhs.matrix().amax()));
    }

    #[test]
    fn lie_derivative_matches_finite_difference(q in symmetric(4), s in matrix(4, -1.0..1.0), u in proptest::collection::vec(-1.0f64..1.0, 4)) {
        let flow = LinearFlow::new(s).unwrap();
        let form = QuadraticForm::new(q, "q").unwrap();
        let u0 = DVector::from_vec(u);
        let dt = 1e-4;
        let trace = integrate(&flow, &(expm(flow.matrix(), -dt).unwrap() * &u0), dt, 2.0 * dt, Method::ExpmStep, std::slice::from_ref(&form)).unwrap();
        let series = trace.series("q").unwrap();
        let fd = (series[2] - series[0]) / (2.0 * dt);
        let exact = lie_derivative(&form, &flow).unwrap().value(&u0);
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
    }

    #[test]
    fn strict_forms_decay_along_trajectories(s in hurwitz(3), u in proptest::collection::vec(-1.0f64..1.0, 3)) {
        let flow = LinearFlow::new(s).unwrap();
        let q = gram_liapunov(&flow).unwrap();
        let gamma = strictness_rate(&q, &flow, &q).unwrap();
        prop_assert!(gamma > 0.0);
        let u0 = DVector::from_vec(u);
        let trace = integrate(&flow, &u0, 0.05, 5.0, Method::ExpmStep, std::slice::from_ref(&q)).unwrap();
        let series = trace.series("gram").unwrap();
        for (t, v) in trace.times.iter().zip(series) {
            prop_assert!(*v <= series[0] * (-gamma * t).exp() * (1.0 + 1e-6) + 1e-300);
        }
    }

    #[test]
    fn gram_solution_is_positive_definite(s in hurwitz(5)) {
        let flow = LinearFlow::new(s).unwrap();
        let q = gram_liapunov(&flow).unwrap();
        prop_assert!(is_positive_definite(&q, 0.0).unwrap().0);
        let lie = lie_derivative(&q, &flow).unwrap();
        prop_assert!((lie.matrix() + DMatrix::<f64>::identity(5, 5)).amax() <= 1e-10 * (1.0 + q.matrix().amax()));
    }

    #[test]
    fn decrement_inside_quarter(params in scalar_params()) {
        let dec = decrement_spectral(&params).unwrap();
        prop_assert!(dec > 0.0 && dec < 0.25);
        let sum: f64 = roots(&params).unwrap().iter().map(|z| z.re).sum();
        prop_assert!((sum + 1.0).abs() < 1e-9);
    }

    #[test]
    fn root_relations_hold(params in scalar_params()) {
        for z in roots(&params).unwrap() {
            let r = check_root_relations(&params, z);
            let scale = params.lambda().max(1.0);
            if z.im != 0.0 && (1.0 + 4.0 * z.re).abs() > 1e-3 {
                prop_assert!(r.res_a2.unwrap().abs() < 1e-8 * scale);
            }
            prop_assert!(r.res_imag.abs() < 1e-8 * scale * scale);
        }
    }

    #[test]
    fn zero_perturbation_is_energy(params in scalar_params(), p in 1.01f64..10.0) {
        prop_assert_eq!(
            scalar::liapunov_form(&params, p, 0.0).unwrap().matrix().clone(),
            scalar::energy_form(&params).matrix().clone()
        );
    }

    #[test]
    fn single_mode_strong_equals_scalar(params in scalar_params(), p in 1.01f64..10.0, eps in 0.0f64..0.3) {
        let pair = OperatorPair::new(
            DMatrix::from_element(1, 1, params.lambda()),
            DMatrix::from_element(1, 1, params.c()),
        ).unwrap();
        prop_assert_eq!(generator(&pair).matrix().clone(), scalar::flow_matrix(&params).matrix().clone());
        prop_assert_eq!(
            strong::liapunov_form_strong(&pair, p, eps).unwrap().matrix().clone(),
            scalar::liapunov_form(&params, p, eps).unwrap().matrix().clone()
        );
    }

    #[test]
    fn weak_energy_sandwich(a in spd(4), frac in 0.05f64..0.95) {
        let lambda1 = sym_eig(&a).unwrap()[0];
        let c = frac * lambda1;
        let sys = WeakSystem::new(a, c).unwrap();
        let forms = weak::weak_energy_forms(&sys);
        let (m, big_m) = liapform::forms::sandwich_constants(&forms.energy_minus1, &forms.k).unwrap();
        prop_assert!(m >= (lambda1 - c) / (2.0 * lambda1) - 1e-12);
        prop_assert!(big_m <= (lambda1 + c) / (2.0 * lambda1) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn certified_rate_never_beats_spectrum(params in scalar_params()) {
        if let Ok(best) = scalar::optimize_rate_bound(&params) {
            prop_assert!(best.norm_rate() <= decrement_spectral(&params).unwrap() + 1e-8);
        }
    }

    #[test]
    fn strong_certificate_below_spectrum(a in spd(3), c in matrix(3, -0.3..0.3)) {
        let c = c + DMatrix::identity(3, 3) * 0.4;
        let pair = OperatorPair::new(a, c).unwrap();
        if let Ok((_, report)) = strong::auto_epsilon(&pair, 3.0) {
            let dec = generator(&pair).spectral_decrement().unwrap();
            prop_assert!(report.norm_rate() <= dec + 1e-8);
        }
    }

    #[test]
    fn base_energy_dissipates_only_velocity(a in spd(3), c in matrix(3, -0.3..0.3)) {
        let c = c + DMatrix::identity(3, 3) * 0.4;
        let pair = OperatorPair::new(a, c).unwrap();
        let lie = lie_derivative(&strong::base_energy_form(&pair), &generator(&pair)).unwrap();
        let mut expected = DMatrix::<f64>::zeros(12, 12);
        for i in 6..9 {
            expected[(i, i)] = -1.0;
        }
        prop_assert!((lie.matrix() - expected).amax() < 1e-12);
    }

    #[test]
    fn weak_energy_is_nonincreasing(a in spd(3), frac in 0.05f64..0.9) {
        let lambda1 = sym_eig(&a).unwrap()[0];
        let sys = WeakSystem::new(a, frac * lambda1).unwrap();
        let forms = weak::weak_energy_forms(&sys);
        let lie = lie_derivative(&forms.energy, &sys.flow()).unwrap();
        prop_assert!(sym_eig(lie.matrix()).unwrap().last().copied().unwrap() <= 1e-12);
    }

    #[test]
    fn weak_functional_drop_dominates_integrated_k(
        a in spd(3),
        frac in 0.05f64..0.8,
        u in proptest::collection::vec(-1.0f64..1.0, 12),
    ) {
        let lambda1 = sym_eig(&a).unwrap()[0];
        let sys = WeakSystem::new(a, frac * lambda1).unwrap();
        let p = sys.p_lower_bound() * 1.5;
        let (params, report) = weak::optimize_weak_epsilon(&sys, p).unwrap();
        let forms = weak::weak_energy_forms(&sys);
        let h = weak::liapunov_form_weak(&sys, &params);
        let dt = 0.01;
        let trace = integrate(&sys.flow(), &DVector::from_vec(u), dt, 10.0, Method::ExpmStep, &[h, forms.k]).unwrap();
        let hs = trace.series("H_eps").unwrap();
        let ks = trace.series("K").unwrap();
        let mut integral = 0.0;
        for i in 1..hs.len() {
            integral += 0.5 * dt * (ks[i - 1] + ks[i]);
            // Trapezoid error is O(dt²) relative to the K scale.
            let slack = 1e-3 * dt * ks[0].max(1e-300) + 1e-12 * hs[0].abs();
            prop_assert!(hs[i] - hs[0] <= -report.strictness * integral + slack * i as f64);
        }
    }
}
