use graphkdv::extension::{boundary_matrices, coupling_matrix, unitarity_residual};
use graphkdv::group::AiryFlow;
use graphkdv::linalg::{fd_weights, Band};
use graphkdv::profiles::check_vertex_conditions;
use graphkdv::resolvent::{airy_apply, boundary_matrix, characteristic_roots, reflect, BetaSign};
use graphkdv::*;
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn beta_sign() -> impl Strategy<Value = BetaSign> {
    prop_oneof![Just(BetaSign::Plus), Just(BetaSign::Minus)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profiles_satisfy_vertex_conditions(z in -1.9f64..1.9, alpha in 0.3f64..3.0, stretch in 1.05f64..4.0) {
        let omega = stretch * 0.25 * z * z * alpha + 0.05;
        let p = make_profile(z, alpha, omega).unwrap();
        prop_assert!(check_vertex_conditions(&p).max() < 1e-11 * (1.0 + omega));
        for i in 0..50 {
            let x = -10.0 + 0.4 * i as f64;
            prop_assert!(p.stationarity_residual(x).abs() < 1e-11 * (1.0 + omega * omega));
            prop_assert!(p.derivative_annihilation(x).abs() < 1e-10 * (1.0 + omega * omega));
        }
    }

    #[test]
    fn roots_obey_vieta_and_ordering(re in 0.01f64..20.0, im in -50.0f64..50.0, bs in beta_sign()) {
        let r = characteristic_roots(C::new(re, im), bs).unwrap();
        let v = r.vieta();
        let scale = 1.0 + r.lambda.norm();
        prop_assert!(v[0].norm() < 1e-12 * scale);
        prop_assert!((v[1] - bs.value()).norm() < 1e-12 * scale);
        prop_assert!((v[2] + r.lambda).norm() < 1e-12 * scale);
        prop_assert!(r.gamma[0].re < 0.0 && r.gamma[1].re > 0.0 && r.gamma[2].re > 0.0);
        prop_assert!(r.gamma[1].im >= r.gamma[2].im);
    }

    #[test]
    fn determinant_agrees(re in 0.01f64..20.0, im in -50.0f64..50.0, z in -4.0f64..4.0, bs in beta_sign()) {
        let r = characteristic_roots(C::new(re, im), bs).unwrap();
        let s = boundary_matrix(z, &r).unwrap();
        prop_assert!((s.det_direct - s.det_closed).norm() < 1e-12 * s.det_closed.norm().max(1.0));
    }

    #[test]
    fn coupling_preserves_boundary_form(z in -5.0f64..5.0, n in 1usize..4) {
        let b = boundary_matrices(&vec![1.0; n], &vec![-1.0; n], &vec![1.0; n], &vec![-1.0; n]).unwrap();
        let l = coupling_matrix(z, n);
        prop_assert!(unitarity_residual(&l, &b).unwrap() < 1e-12 * (1.0 + z * z).powi(2));
    }

    #[test]
    fn fd_weights_are_exact_on_polynomials(shift in -3.0f64..3.0, p in 0usize..6) {
        let x: Vec<f64> = (0..7).map(|i| i as f64 * 0.5).collect();
        let w = fd_weights(shift, &x, 3);
        for d in 0..=3usize {
            let approx: f64 = w[d].iter().zip(&x).map(|(c, xi)| c * xi.powi(p as i32)).sum();
            let exact = if d > p { 0.0 } else {
                (0..d).map(|k| (p - k) as f64).product::<f64>() * shift.powi((p - d) as i32)
            };
            prop_assert!((approx - exact).abs() < 1e-8 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn band_lu_solves(seed in 0u64..1000) {
        let n = 40;
        let mut a = Band::zeros(n, 3, 2);
        let mut s = seed as f64 + 1.0;
        let mut next = || { s = (s * 16807.0) % 2147483647.0; s / 2147483647.0 - 0.5 };
        for i in 0..n {
            for j in i.saturating_sub(3)..(i + 3).min(n) {
                a.add(i, j, next());
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.matvec(&x);
        if let Ok(lu) = a.lu() {
            let y = lu.solve(&b);
            let err = y.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            prop_assert!(err < 1e-6, "{err}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reflection_reverses_the_airy_operator(c in 1.0f64..8.0, w in 0.5f64..2.0, beta in prop_oneof![Just(1.0), Just(-1.0)]) {
        let grid = build_grid(StarGraph::two_half_lines(), 20.0, 400).unwrap();
        let u = GraphFunction::from_fn(&grid, |e, x| C::new((-(x - c).powi(2) / w).exp() * (1.0 + e as f64), 0.0));
        let lhs = airy_apply(&reflect(&u), beta, 5);
        let rhs = reflect(&airy_apply(&u, beta, 5)).map(|v| -v);
        let d = lhs.zip_with(&rhs, |a, b| a - b).unwrap();
        prop_assert!(d.max_abs() < 1e-9 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn airy_flow_is_unitary(z in -2.0f64..2.0, c in 2.0f64..8.0) {
        let grid = build_grid(StarGraph::two_half_lines(), 20.0, 200).unwrap();
        let flow = AiryFlow::new(&grid, z).unwrap();
        let mut u = flow.project_fn(|e, x| (-(x.abs() - c).powi(2)).exp() * (1.0 + e as f64));
        let n0 = flow.norm(&u);
        flow.evolve(&mut u, 0.01, 50, |_, _| {}).unwrap();
        let (_, cond) = flow.vertex_report(&u);
        prop_assert!((flow.norm(&u) / n0 - 1.0).abs() < 1e-11);
        prop_assert!(cond < 1e-9 * n0);
    }
}
