use gauss_quad::GaussLegendre;
use num_traits::Float;
use proptest::prelude::*;
use raytrap_core::geometry::Scene;
use raytrap_core::linalg::Vec3;
use raytrap_core::morawetz::*;
use raytrap_core::{DoubleDouble, Error};

fn eps0_42() -> f64 {
    (1.0 + 3f64.sqrt()) / 4.0
}

#[test]
fn threshold_examples() {
    let t = bilaplacian_threshold(4, 2).unwrap();
    assert!((t.eps0 - eps0_42()).abs() < 1e-15);
    assert!(t.a_at(t.eps0).abs() < 1e-12);
    assert_eq!(bilaplacian_threshold(4, 3).unwrap().eps0, 0.0);
    assert!((bilaplacian_threshold(4, 1).unwrap().eps0 - 0.8).abs() < 1e-15);
    assert!(bilaplacian_threshold(2, 2).is_err());
    assert!(bilaplacian_threshold(3, 2).unwrap().note.is_some());
}

#[test]
fn a_polynomial_matches_its_factored_form() {
    for n in 2..8usize {
        for k in 1..=n {
            let t = bilaplacian_threshold(n, k);
            let Ok(t) = t else { continue };
            let (nf, kf) = (n as f64, k as f64);
            for e in [0.0, 0.3, 0.7, 1.0] {
                let want = -(nf - kf + 2.0) * (nf - kf) * e * e - 2.0 * (nf - kf) * (kf - 3.0) * e - (kf - 1.0) * (kf - 3.0);
                assert!((t.a_at(e) - want).abs() < 1e-12, "n={n} k={k} e={e}");
            }
            assert!(t.b_at(1.0).abs() < 1e-12 && t.c_at(1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn closed_form_derivatives_match_differences() {
    let weights = [
        Weight::TwoCenter { c: [4.0, 0.0, 0.0] },
        Weight::gauge(4, 2, eps0_42()).unwrap(),
        Weight::gauge(4, 2, 0.5).unwrap(),
        Weight::gauge(3, 1, 0.3).unwrap(),
        Weight::gauge(3, 3, 1.0).unwrap(),
        Weight::extended(3, 1, eps0_42()).unwrap(),
    ];
    for w in weights {
        let r = check_derivatives(&w, 5.0, 1000, 11).unwrap();
        assert_eq!(r.samples, 1000);
        assert!(r.passes, "{r:?}");
    }
}

#[test]
fn bilaplacian_sign_at_and_below_the_threshold() {
    let at = verify_bilaplacian(&Weight::gauge(4, 2, eps0_42()).unwrap(), 1000, 3).unwrap();
    assert!(at.nonpositive, "{at:?}");
    let below = verify_bilaplacian(&Weight::gauge(4, 2, 0.5).unwrap(), 1000, 3).unwrap();
    assert!(!below.nonpositive && below.max_value > 0.0);
    for eps in [0.1, 0.5, 1.0] {
        assert!(verify_bilaplacian(&Weight::gauge(3, 3, eps).unwrap(), 500, 5).unwrap().nonpositive);
    }
}

#[test]
fn round_gauge_has_the_radial_bilaplacian() {
    for n in 2..7usize {
        for k in 1..=n {
            let w = Weight::gauge(n, k, 1.0).unwrap();
            let (pts, _) = sample_ball(&w, 2.0, 50, n as u64);
            for x in pts {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let want = -((n - 1) as f64) * (n as f64 - 3.0) / r.powi(3);
                let got = w.bilaplacian(&x).unwrap();
                assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "n={n} k={k}");
            }
        }
    }
}

#[test]
fn bilaplacian_verdict_rejects_two_center() {
    assert!(matches!(
        verify_bilaplacian(&Weight::TwoCenter { c: [4.0, 0.0, 0.0] }, 10, 1),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn collinear_lambda2() {
    let c = Vec3::new(4.0, 0.0, 0.0);
    let x = Vec3::new(1.0, 0.0, 0.0);
    assert!(sin2_theta(x, c) < 1e-30);
    assert!((lambda2(x, c) - 4.0 / 3.0).abs() < 1e-15);
    assert!((lambda2_eigensolve(x, c) - 4.0 / 3.0).abs() < 1e-14);
}

#[test]
fn two_center_excluded_measure_shrinks() {
    let s = Scene::<f64>::two_spheres(4.0, 0.5).unwrap();
    let c = Vec3::new(4.0, 0.0, 0.0);
    let runs: Vec<_> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&a| two_center_analysis(&s, c, 6.0, a, 20_000, 2024).unwrap())
        .collect();
    for r in &runs {
        assert!(r.lambda2_error < 1e-10);
        assert!(r.form_constant >= r.form_constant_exact - 1e-12);
        // the smallest eigenvalue is bounded below by a multiple of alpha
        assert!(r.form_constant_exact > 0.0);
    }
    assert!(runs[0].excluded_measure > runs[1].excluded_measure);
    assert!(runs[1].excluded_measure > runs[2].excluded_measure);
}

#[test]
fn two_center_analysis_rejects_small_balls() {
    let s = Scene::<f64>::standard();
    assert!(two_center_analysis(&s, Vec3::new(4.0, 0.0, 0.0), 3.0, 0.1, 10, 1).is_err());
    assert!(two_center_analysis(&s, Vec3::new(4.0, 0.0, 0.0), 6.0, 0.0, 10, 1).is_err());
}

#[test]
fn two_balls_pass_every_flag() {
    let s = Scene::<f64>::two_spheres(4.0, 0.5).unwrap();
    let w = Weight::TwoCenter { c: [4.0, 0.0, 0.0] };
    let r = scene_certificate(&w, &s, 6.0, 1000, 2000, 9).unwrap();
    assert!(r.flags.all(), "{r:?}");
    assert!(r.bilaplacian_fd_max <= 1e-6);
    assert_eq!(r.interior_samples, 1000);
}

#[test]
fn flux_flag_catches_a_badly_placed_center() {
    // centres that do not sit inside the obstacles
    let s = Scene::<f64>::two_spheres(4.0, 0.5).unwrap();
    let w = Weight::TwoCenter { c: [2.0, 0.0, 0.0] };
    let r = scene_certificate(&w, &s, 6.0, 200, 500, 9);
    let r = match r {
        Ok(r) => r,
        Err(e) => panic!("{e}"),
    };
    assert!(!r.flags.boundary_flux_nonneg);
}

#[test]
fn dog_bone_is_illuminated() {
    let w = Weight::gauge(3, 1, eps0_42()).unwrap();
    let body = DogBone::default();
    let r = illumination(&w, &body, 200, 64).unwrap();
    assert!(r.samples >= 10_000);
    assert!(r.illuminated && r.margin > 0.0, "{r:?}");
    // the body really is waisted
    assert!(body.profile(0.0) < body.profile(1.2));
    assert!(illumination(&w, &body, 10, 10).is_err());
}

#[test]
fn extension_damps_the_normal_derivative() {
    let r = extension_check(3, 1, eps0_42(), &DogBone::default(), &[-10.0, -1.0, 0.0, 0.5, 3.0], 40, 16).unwrap();
    assert!(r.passes, "{r:?}");
}

#[test]
fn log_factor_matches_the_antiderivative() {
    for t in [1e-3, 0.5, 1.0, 7.0, 1e3, 1e6] {
        let d = DoubleDouble::new(t);
        let exact = (d + (d * d + DoubleDouble::new(1.0)).sqrt()).ln() * DoubleDouble::new(2.0);
        let v = log_factor(t).unwrap();
        assert!((v - exact.to_f64()).abs() <= 1e-12 * exact.to_f64().max(1.0), "T={t}");
    }
    assert!((log_factor(1.0).unwrap() - 1.762747174).abs() < 1e-9);
    let ratio = log_factor(1e6).unwrap() / (2.0 * (2e6f64).ln());
    assert!((ratio - 1.0).abs() < 1e-6);
    assert!(log_factor(0.0).is_err() && log_factor(-1.0).is_err());
}

#[test]
fn log_factor_is_the_integral() {
    let gl = GaussLegendre::new(40).unwrap();
    for t in [0.5, 2.0, 10.0] {
        // substitute z = sinh(u) piecewise to keep the quadrature honest
        let direct: f64 = (0..20)
            .map(|i| {
                let a = -t + 2.0 * t * i as f64 / 20.0;
                gl.integrate(a, a + 0.1 * t, |z| 1.0 / (1.0 + z * z).sqrt())
            })
            .sum();
        assert!((direct - log_factor(t).unwrap()).abs() < 1e-10, "T={t}");
    }
}

proptest! {
    #[test]
    fn log_factor_increases(a in 1e-6f64..1e6, b in 1e-6f64..1e6) {
        prop_assume!(a < b);
        prop_assert!(log_factor(a).unwrap() < log_factor(b).unwrap());
    }

    #[test]
    fn lambda2_is_the_largest_eigenvalue(x in prop::array::uniform3(-6.0f64..6.0)) {
        let c = Vec3::new(4.0, 0.0, 0.0);
        let x = Vec3::from_f64(x);
        prop_assume!(x.norm() > 1e-3 && (x - c).norm() > 1e-3);
        let e = lambda2_eigensolve(x, c);
        prop_assert!((lambda2(x, c) - e).abs() <= 1e-10 * e.max(1.0));
    }

    #[test]
    fn two_center_hessian_is_psd(x in prop::array::uniform3(-6.0f64..6.0)) {
        let w = Weight::TwoCenter { c: [4.0, 0.0, 0.0] };
        prop_assume!(w.singular_scale(&x) > 1e-3);
        let ev = w.hessian_eigenvalues(&x).unwrap();
        prop_assert!(ev[0] >= -1e-12);
        prop_assert!(w.laplacian(&x).unwrap() > 0.0);
    }

    #[test]
    fn gauge_is_sign_definite_above_threshold(eps in 0.69f64..=1.0, x in prop::array::uniform4(-1.0f64..1.0)) {
        let w = Weight::gauge(4, 2, eps).unwrap();
        prop_assume!(w.singular_scale(&x) > 1e-3);
        let v = w.bilaplacian(&x).unwrap();
        prop_assert!(v <= 1e-8 * w.singular_scale(&x).powi(-3));
    }
}
