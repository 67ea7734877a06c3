use proptest::prelude::*;
use raytrap_core::amplitude::*;
use raytrap_core::billiard::{contracting_product, Story};
use raytrap_core::geometry::{ConvexBody, Scene};
use raytrap_core::linalg::Vec3;
use raytrap_core::phase::Sign;
use raytrap_core::trapped::build_cutoff;
use raytrap_core::{DoubleDouble, Error};

fn xi() -> Vec3<f64> {
    Vec3::new(1.0, 0.03, 0.01).normalize()
}

fn lambda(scene: &Scene<f64>) -> f64 {
    contracting_product(scene, scene.gap() * 1e-4, 4).unwrap()
}

fn bump(center: Vec3<f64>, sigma: f64) -> impl Fn(Vec3<f64>, Vec3<f64>) -> f64 + Sync {
    move |x: Vec3<f64>, _: Vec3<f64>| (-(x - center).norm_sq() / (sigma * sigma)).exp()
}

/// Compactly supported bump of radius `r`.
fn compact_bump(center: Vec3<f64>, r: f64) -> impl Fn(Vec3<f64>, Vec3<f64>) -> f64 + Sync {
    move |x: Vec3<f64>, _: Vec3<f64>| {
        let u = (x - center).norm_sq() / (r * r);
        if u < 1.0 {
            (1.0 - 1.0 / (1.0 - u)).exp()
        } else {
            0.0
        }
    }
}

#[test]
fn empty_story_has_unit_product() {
    let s = Scene::<f64>::standard();
    let c = curvature_product(&s, s.midpoint(), xi(), &Story::empty(), s.midpoint(), Sign::Plus).unwrap();
    assert_eq!(c.value, 1.0);
    assert!(c.factors.is_empty());
}

#[test]
fn periodic_products_scale_like_lambda_powers() {
    let s = Scene::<f64>::standard();
    let lam = lambda(&s);
    let x = s.midpoint() + Vec3::new(0.0, 0.02, -0.01);
    let mut ratios = Vec::new();
    for r in 1..=8 {
        let j = Story::alternating(2, 2 * r);
        let c = curvature_product(&s, x, xi(), &j, s.midpoint(), Sign::Plus).unwrap();
        assert!(c.value > 0.0);
        ratios.push(c.value / lam.powi(r as i32));
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(lo > 0.5 && hi < 20.0, "{ratios:?}");
}

#[test]
fn product_telescopes_along_one_ray() {
    // Solving the prefix story afresh at a point on the ray must recover the
    // product of the remaining legs.
    let s = Scene::<f64>::standard();
    let y = s.midpoint();
    let x = s.midpoint() + Vec3::new(0.3, 0.05, -0.02);
    let j = Story::alternating(2, 7);
    let full = TracedPhase::solve(&s, x, xi(), &j, y, Sign::Plus, None).unwrap();
    for undone in 1..j.len() {
        // Middle of the leg leaving P_{n - undone}.
        let n = j.len();
        let tau: f64 = full.legs[n - undone..].iter().sum::<f64>() + 0.5 * full.legs[n - undone - 1];
        let z = full.backward_point(tau);
        let prefix = full.remaining_story(tau);
        assert_eq!(prefix.len(), n - undone);
        let part = curvature_product(&s, z, xi(), &prefix, y, Sign::Plus).unwrap();
        let g = full.partial_product(tau);
        let rel = (part.value * g - full.lambda).abs() / full.lambda;
        assert!(rel < 1e-8, "undone {undone}: {rel:e}");
    }
    // Undoing every reflection gives the whole product.
    let g = full.partial_product(full.l_j() + 0.3);
    assert!((g - full.lambda).abs() < 1e-10 * full.lambda);
}

#[test]
fn traced_product_matches_stored_factors() {
    let s = Scene::<f64>::standard();
    let x = s.midpoint() + Vec3::new(-0.2, 0.1, 0.05);
    for n in 1..=6 {
        let j = Story::alternating(1, n);
        let t = TracedPhase::solve(&s, x, xi(), &j, s.midpoint(), Sign::Minus, None).unwrap();
        let c = curvature_product(&s, x, xi(), &j, s.midpoint(), Sign::Minus).unwrap();
        assert!((t.lambda - c.value).abs() < 1e-12 * c.value);
        assert_eq!(t.points.len(), n);
    }
}

#[test]
fn convergence_is_geometric_in_double_double() {
    let rep = convergence_check(&Scene::<DoubleDouble>::standard(), 10).unwrap();
    let lam = (3.0 - 8f64.sqrt()).powi(4);
    assert!((rep.lambda - lam).abs() < 1e-10 * lam);
    assert_eq!(rep.patterns.len(), 4);
    for p in &rep.patterns {
        let fit = p.fit.expect("fit");
        assert!(fit.r2 > 0.9, "{}: R2 {}", p.label, fit.r2);
        assert!(p.alpha.unwrap() < 1.0);
        assert!(!p.flagged);
        assert_eq!(p.failures, 0);
        assert!(p.a_est.iter().all(|&a| a > 0.0));
    }
}

#[test]
fn convergence_needs_six_periods() {
    assert!(matches!(
        convergence_check(&Scene::<f64>::standard(), 5),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn mirror_patterns_agree_for_equal_radii() {
    // Only the axial midpoint sample is mirror symmetric.
    let mid = [[0.5, 0.0, 0.0]];
    let rep = convergence_check_with(&Scene::<f64>::standard(), 6, 3, &mid).unwrap();
    let [p1, p2, p3, p4] = Pattern::all();
    let a = |p| rep.pattern(p).unwrap().a_est[0];
    assert!((a(p1) - a(p3)).abs() < 1e-9 * a(p1));
    assert!((a(p2) - a(p4)).abs() < 1e-9 * a(p2));
}

#[test]
fn unequal_radii_separate_the_tail_patterns() {
    let b1 = ConvexBody::sphere(Vec3::zero(), 1.0).unwrap();
    let b2 = ConvexBody::sphere(Vec3::new(3.7, 0.0, 0.0), 0.7).unwrap();
    let s = Scene::new(b1, b2, 0.4).unwrap();
    let mid = [[0.5, 0.0, 0.0]];
    let rep = convergence_check_with(&s, 6, 3, &mid).unwrap();
    let [_, p2, _, p4] = Pattern::all();
    let a2 = rep.pattern(p2).unwrap().a_est[0];
    let a4 = rep.pattern(p4).unwrap().a_est[0];
    assert!(a2 > 0.0 && a4 > 0.0);
    assert!((a2 - a4).abs() > 0.01 * a2.max(a4), "{a2} {a4}");
}

#[test]
fn free_leading_term_is_the_shifted_symbol() {
    let s = Scene::<f64>::standard();
    let q = bump(Vec3::new(2.0, 0.1, 0.0), 0.4);
    let cfg = AmplitudeConfig::new(s.midpoint(), 0.05);
    let d = xi();
    for (x, t) in [(Vec3::new(2.5, 0.0, 0.1), 0.7), (Vec3::new(1.7, -0.2, 0.0), 0.0), (Vec3::new(3.0, 0.3, 0.2), 1.9)] {
        for sign in [Sign::Plus, Sign::Minus] {
            let w = amplitude_eval(&s, &TermSpec::new(Story::empty(), sign, 0), x, t, d, &q, &cfg).unwrap();
            let expect = 0.5 * q(x - sign.apply(d) * t, d);
            assert!((w - expect).abs() < 1e-14, "{w} {expect}");
        }
    }
}

#[test]
fn bump_maximum_is_carried_along_the_ray() {
    let s = Scene::<f64>::standard();
    let x0 = Vec3::new(1.6, 0.05, 0.0);
    let q = bump(x0, 0.3);
    let cfg = AmplitudeConfig::new(s.midpoint(), 0.05);
    for t in [0.0, 0.4, 0.9] {
        let w = amplitude_eval(&s, &TermSpec::new(Story::empty(), Sign::Plus, 0), x0 + xi() * t, t, xi(), &q, &cfg).unwrap();
        assert!((w - 0.5).abs() < 1e-14);
    }
}

#[test]
fn first_correction_of_the_free_wave() {
    // For a plane phase, box w_0 = -(1/2) Lap_perp q is constant along the
    // characteristic, so w_1 = (t/4) Lap_perp q(x - t xi).
    let s = Scene::<f64>::standard();
    let x0 = Vec3::new(1.8, 0.0, 0.0);
    let sigma = 0.5;
    let q = bump(x0, sigma);
    let d = xi();
    let lap_perp = |z: Vec3<f64>| {
        let r = (z - x0).reject(d).norm_sq();
        q(z, d) * (4.0 * r / sigma.powi(4) - 4.0 / (sigma * sigma))
    };
    let cfg = AmplitudeConfig::new(s.midpoint(), 0.05);
    for (x, t) in [(Vec3::new(2.3, 0.1, 0.0), 0.6), (Vec3::new(2.6, -0.2, 0.15), 1.1)] {
        let w = amplitude_eval(&s, &TermSpec::new(Story::empty(), Sign::Plus, 1), x, t, d, &q, &cfg).unwrap();
        let expect = 0.25 * t * lap_perp(x - d * t);
        assert!((w - expect).abs() < 2e-3 * expect.abs().max(0.1), "{w} {expect}");
    }
}

#[test]
fn fd_step_under_the_floor_is_refused() {
    let s = Scene::<f64>::standard();
    let q = bump(s.midpoint(), 0.3);
    let cfg = AmplitudeConfig::new(s.midpoint(), 5e-4);
    let r = amplitude_eval(&s, &TermSpec::new(Story::empty(), Sign::Plus, 1), s.midpoint(), 0.5, xi(), &q, &cfg);
    assert!(matches!(r, Err(Error::Resolution(_))));
    // The leading term needs no differences.
    assert!(amplitude_eval(&s, &TermSpec::new(Story::empty(), Sign::Plus, 0), s.midpoint(), 0.5, xi(), &q, &cfg).is_ok());
    let mut cfg = cfg;
    cfg.k_max = 0;
    assert!(matches!(
        amplitude_eval(&s, &TermSpec::new(Story::empty(), Sign::Plus, 1), s.midpoint(), 0.5, xi(), &q, &cfg),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn reflected_terms_wait_for_the_reflections() {
    let s = Scene::<f64>::standard();
    let q = |_: Vec3<f64>, _: Vec3<f64>| 1.0;
    let cfg = AmplitudeConfig::new(s.midpoint(), 0.05);
    let x = s.midpoint() + Vec3::new(0.2, 0.05, 0.0);
    let j = Story::alternating(2, 3);
    let tr = TracedPhase::solve(&s, x, xi(), &j, s.midpoint(), Sign::Plus, None).unwrap();
    let term = TermSpec::new(j, Sign::Plus, 0);
    let before = amplitude_eval(&s, &term, x, tr.l_j() - 1e-3, xi(), &q, &cfg).unwrap();
    let after = amplitude_eval(&s, &term, x, tr.l_j() + 1e-3, xi(), &q, &cfg).unwrap();
    assert_eq!(before, 0.0);
    assert!((after - 0.5 * tr.lambda).abs() < 1e-14);
    // w_1 integrates w_0 of shorter stories, all silent this early.
    let w1 = amplitude_eval(&s, &TermSpec::new(term.story.clone(), Sign::Plus, 1), x, 0.5, xi(), &q, &cfg).unwrap();
    assert_eq!(w1, 0.0);
}

#[test]
fn vanishes_once_the_backward_flow_leaves_the_support() {
    let s = Scene::<f64>::standard();
    let x0 = Vec3::new(1.5, 0.0, 0.0);
    let q = compact_bump(x0, 0.2);
    let cfg = AmplitudeConfig::new(s.midpoint(), 0.05);
    let term = TermSpec::new(Story::empty(), Sign::Plus, 0);
    let x = x0 + xi() * 0.5;
    assert!(amplitude_eval(&s, &term, x, 0.5, xi(), &q, &cfg).unwrap() > 0.1);
    assert_eq!(amplitude_eval(&s, &term, x, 0.9, xi(), &q, &cfg).unwrap(), 0.0);
    assert_eq!(amplitude_eval(&s, &term, x, 0.1, xi(), &q, &cfg).unwrap(), 0.0);
}

#[test]
fn profile_is_transported_between_reflections() {
    let s = Scene::<f64>::standard();
    let q = bump(Vec3::new(3.2, 0.1, 0.0), 0.4);
    let x = s.midpoint() + Vec3::new(0.1, 0.05, 0.02);
    for n in [1, 2, 5] {
        let j = Story::alternating(2, n);
        let a = TracedPhase::solve(&s, x, xi(), &j, s.midpoint(), Sign::Plus, None).unwrap();
        let last_leg = *a.legs.last().unwrap();
        let t = a.l_j() + 0.6;
        for step in [0.05, 0.2] {
            if step > 0.5 * last_leg {
                continue;
            }
            let x2 = x + a.grad.normalize() * step;
            let b = TracedPhase::solve(&s, x2, xi(), &j, s.midpoint(), Sign::Plus, Some(&a.points)).unwrap();
            let qa = q(a.backward_point(t), xi());
            let qb = q(b.backward_point(t + step), xi());
            assert!((qa - qb).abs() < 1e-8, "|J| = {n}: {qa} {qb}");
            // The tube ratio absorbs the spreading of the last leg.
            let c = *a.curvatures.last().unwrap();
            let spread = |s: f64| 1.0 + s * c.trace() + s * s * c.det();
            let expect = a.lambda * spread(last_leg) / spread(last_leg + step);
            assert!((b.lambda - expect).abs() < 1e-8 * expect);
        }
    }
}

#[test]
fn leading_terms_decay_like_half_the_reflections() {
    let s = Scene::<f64>::standard();
    let lam = lambda(&s);
    let q = build_cutoff(&s, 0.28, 0.05, 0.5, 2.0, 0.88).unwrap();
    let cfg = AmplitudeConfig::new(s.midpoint(), 0.05);
    let xs = chi0_samples(&s, 6, 0.1, 3);
    // Worst sup_t |w_0^J| / lambda^(|J|/2) per length.
    let mut worst = [0.0f64; 11];
    for &x in &xs {
        for (n, slot) in worst.iter_mut().enumerate() {
            for sign in [Sign::Plus, Sign::Minus] {
                let first = if sign.apply(xi()).dot(s.axis_e) > 0.0 { 2 } else { 1 };
                let j = Story::alternating(first, n);
                let Ok(tr) = TracedPhase::solve(&s, x, xi(), &j, s.midpoint(), sign, None) else { continue };
                let term = TermSpec::new(j, sign, 0);
                let mut sup: f64 = 0.0;
                for i in 0..40 {
                    let t = tr.l_j() + i as f64 * 0.1;
                    sup = sup.max(amplitude_eval(&s, &term, x, t, xi(), &q, &cfg).unwrap().abs());
                }
                *slot = slot.max(sup / lam.powi((n / 2) as i32));
            }
        }
    }
    let early = worst[..6].iter().cloned().fold(0.0, f64::max);
    assert!(early > 0.0);
    for (n, w) in worst.iter().enumerate().skip(6) {
        assert!(*w <= 2.0 * early, "|J| = {n}: {worst:?}");
    }
}

#[test]
fn summed_leading_amplitudes_decay_at_the_periodic_rate() {
    let s = Scene::<f64>::standard();
    let q = build_cutoff(&s, 0.28, 0.05, 0.5, 2.0, 0.88).unwrap();
    let cfg = AmplitudeConfig::new(s.midpoint(), 0.05);
    let xs = chi0_samples(&s, 8, 0.1, 7);
    let ts: Vec<f64> = (0..=60).map(|i| i as f64 * 0.25).collect();
    let d = amplitude_decay(&s, &q, &cfg, xi(), &xs, &ts, 10, 3.0).unwrap();
    let rate = d.rate.unwrap();
    assert!(rate > 0.0);
    assert!(d.fit.unwrap().r2 > 0.9);
    // One period is two gaps and multiplies the amplitude by lambda.
    let periodic = -lambda(&s).ln() / (2.0 * s.gap());
    assert!((rate - periodic).abs() < 0.1 * periodic, "{rate} vs {periodic}");
    assert_eq!(d.sup_sum.len(), ts.len());
}

#[test]
fn census_counts_and_windows() {
    let s = Scene::<f64>::standard();
    let q = build_cutoff(&s, 0.28, 0.05, 0.5, 2.0, 0.88).unwrap();
    let cfg = AmplitudeConfig::new(s.midpoint(), 0.05);
    let xs = chi0_samples(&s, 8, 0.1, 11);
    let c = story_census(&s, &q, &cfg, xi(), &xs, 40.0, 0.25, 6).unwrap();
    for (t, &n) in c.t.iter().zip(&c.window_count) {
        if *t < c.c1 {
            assert_eq!(n, 1, "t = {t}");
        }
    }
    assert!(c.cumulative_count.windows(2).all(|w| w[0] <= w[1]));
    let fit = c.fit.unwrap();
    assert!(fit.slope > 0.0 && fit.slope.is_finite());
    assert!(fit.r2 > 0.9);
    // After localization each length stays active for a bounded time.
    let per_len = c.c2 * 2.0 - c.c1;
    assert!(per_len.is_finite());
    for w in c.windows.iter().filter(|w| !w.story.is_empty()) {
        let n = w.story.len() as f64;
        assert!(c.c1 * n <= w.t_min + 1e-12 && w.t_max <= c.c2 * (n + 1.0) + 1e-12);
    }
    // Direct evaluation: nothing outside the measured windows.
    for w in &c.windows {
        let story = Story::new(w.story.clone()).unwrap();
        let term = TermSpec::new(story, w.sign, 0);
        for &x in &xs {
            for t in [w.t_min - 0.3, w.t_max + 0.3] {
                if t < 0.0 {
                    continue;
                }
                let v = amplitude_eval(&s, &term, x, t, xi(), &q, &cfg).unwrap();
                assert_eq!(v, 0.0, "{:?} at t = {t}", w.story);
            }
        }
    }
}

#[test]
fn census_rejects_long_horizons() {
    let s = Scene::<f64>::standard();
    let q = build_cutoff(&s, 0.28, 0.05, 0.5, 2.0, 0.88).unwrap();
    let cfg = AmplitudeConfig::new(s.midpoint(), 0.05);
    let xs = chi0_samples(&s, 2, 0.1, 1);
    assert!(story_census(&s, &q, &cfg, xi(), &xs, 500.0, 0.5, 4).is_err());
}

#[test]
fn chi0_samples_stay_inside_the_collar() {
    let s = Scene::<f64>::standard();
    let u = s.u_infinity();
    let xs = chi0_samples(&s, 50, 0.2, 5);
    assert_eq!(xs.len(), 50);
    assert!(xs.iter().all(|&x| u.nu(x) <= 0.8 && s.outside_bodies(x)));
    assert_eq!(xs, chi0_samples(&s, 50, 0.2, 5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn products_are_positive(
        n in 1usize..8,
        a in 0.2f64..0.8,
        q1 in -0.3f64..0.3,
        q2 in -0.3f64..0.3,
        minus in any::<bool>(),
    ) {
        let s = Scene::<f64>::standard();
        let u = s.u_infinity();
        let x = u.point(s.gap() * a, u.radius * q1, u.radius * q2);
        let sign = if minus { Sign::Minus } else { Sign::Plus };
        let first = if minus { 1 } else { 2 };
        let c = curvature_product(&s, x, xi(), &Story::alternating(first, n), s.midpoint(), sign).unwrap();
        prop_assert!(c.value > 0.0);
        prop_assert!(c.factors.iter().all(|&f| f > 0.0 && f < 1.0));
    }

    #[test]
    fn free_term_transports_any_bump(
        cx in 1.2f64..2.8, cy in -0.3f64..0.3,
        t in 0.0f64..3.0,
        ty in -0.2f64..0.2, tz in -0.2f64..0.2,
        minus in any::<bool>(),
    ) {
        let s = Scene::<f64>::standard();
        let x0 = Vec3::new(cx, cy, 0.0);
        let q = bump(x0, 0.35);
        let d = Vec3::new(1.0, ty, tz).normalize();
        let sign = if minus { Sign::Minus } else { Sign::Plus };
        let cfg = AmplitudeConfig::new(s.midpoint(), 0.05);
        let x = x0 + sign.apply(d) * t;
        let w = amplitude_eval(&s, &TermSpec::new(Story::empty(), sign, 0), x, t, d, &q, &cfg).unwrap();
        prop_assert!((w - 0.5).abs() < 1e-13);
    }
}
