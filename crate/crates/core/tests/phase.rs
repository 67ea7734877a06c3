use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raytrap_core::billiard::{reflect_direction, Story};
use raytrap_core::geometry::{ConvexBody, RayHit, Scene};
use raytrap_core::linalg::{Mat2, Mat3, Vec3};
use raytrap_core::phase::{
    derivative_growth_certificate, evaluate_phase, evaluate_phase_warm, propagate_wavefront,
    reflect_wavefront, PhaseQuery, Sign, WavefrontSample,
};
use raytrap_core::Error;

fn source() -> Vec3<f64> {
    Vec3::new(-10.0, 0.0, 0.0)
}

/// Pushes `u` in the transverse frame through the first-order ray field of `w`.
fn pencil_ray(w: &WavefrontSample<f64>, a: f64, b: f64) -> (Vec3<f64>, Vec3<f64>) {
    let [f1, f2] = w.frame;
    let q = w.curvature.apply([a, b]);
    (w.x + f1 * a + f2 * b, (w.grad + f1 * q[0] + f2 * q[1]).normalize())
}

/// Reflected curvature measured from a five-ray pencil.
fn pencil_curvature(w: &WavefrontSample<f64>, body: &ConvexBody<f64>, out: &WavefrontSample<f64>) -> Mat2<f64> {
    let a = 1e-5;
    let [g1, g2] = out.frame;
    let p0 = out.x;
    let d0 = out.grad;
    let shoot = |da: f64, db: f64| {
        let (o, d) = pencil_ray(w, da, db);
        let RayHit::Hit(h) = body.ray_intersect(o, d, 1e-8).unwrap() else { panic!("pencil ray missed") };
        let dr = reflect_direction(d, h.normal()).unwrap();
        let s = -(h.point() - p0).dot(d0) / dr.dot(d0);
        let x = h.point() + dr * s - p0;
        ([x.dot(g1), x.dot(g2)], [dr.dot(g1), dr.dot(g2)])
    };
    let (xp1, dp1) = shoot(a, 0.0);
    let (xm1, dm1) = shoot(-a, 0.0);
    let (xp2, dp2) = shoot(0.0, a);
    let (xm2, dm2) = shoot(0.0, -a);
    let jx = Mat2::new(xp1[0] - xm1[0], xp2[0] - xm2[0], xp1[1] - xm1[1], xp2[1] - xm2[1]);
    let jd = Mat2::new(dp1[0] - dm1[0], dp2[0] - dm2[0], dp1[1] - dm1[1], dp2[1] - dm2[1]);
    jd.mul(&jx.inverse().unwrap())
}

fn random_incidence(rng: &mut ChaCha8Rng, body: &ConvexBody<f64>) -> Option<(WavefrontSample<f64>, RayHit<f64>)> {
    let target = body.boundary_samples(64)[rng.gen_range(0..64)];
    let n = body.normal(target);
    let (t1, t2) = n.orthonormal_pair();
    // Incoming direction with cos(theta) in [0.2, 1].
    let c: f64 = rng.gen_range(0.2..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - c * c).sqrt();
    let d = -(n * c) + (t1 * phi.cos() + t2 * phi.sin()) * s;
    let start = target - d * 2.0;
    let mut w = WavefrontSample::plane(start, d, 0.0, Sign::Plus);
    let (k1, k2, rot): (f64, f64, f64) = (rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0));
    let (cr, sr) = (rot.cos(), rot.sin());
    w.curvature = Mat2::new(
        k1 * cr * cr + k2 * sr * sr,
        (k1 - k2) * cr * sr,
        (k1 - k2) * cr * sr,
        k1 * sr * sr + k2 * cr * cr,
    );
    // Carry the pencil to just before the hit so the offsets stay first order.
    let hit = body.ray_intersect(start, d, 1e-8)?;
    let near = propagate_wavefront(&w, hit.length() - 1e-3).ok()?;
    let hit = body.ray_intersect(near.x, near.grad, 1e-8)?;
    Some((near, hit))
}

#[test]
fn reflection_matches_pencil_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bodies = [
        ConvexBody::sphere(Vec3::new(0.3, -0.2, 0.1), 1.3).unwrap(),
        ConvexBody::ellipsoid(Vec3::zero(), Vec3::new(1.0, 0.6, 1.7), Mat3::rotation_zyx(0.3, -0.4, 0.9)).unwrap(),
    ];
    let mut checked = 0;
    for body in &bodies {
        for _ in 0..40 {
            let Some((w, RayHit::Hit(h))) = random_incidence(&mut rng, body) else { continue };
            let out = reflect_wavefront(&w, &h, 1, 1e-8).unwrap();
            let fd = pencil_curvature(&w, body, &out);
            let scale = out.curvature.max_abs().max(1.0);
            assert!(
                fd.sub(&out.curvature).max_abs() / scale < 1e-4,
                "pencil {:?} vs formula {:?}",
                fd,
                out.curvature
            );
            // PSD in, PSD out, bounded below by twice the projected shape operator.
            let shape_min = h.surface.shape.sym_eigenvalues()[0];
            let min_out = out.principal_curvatures()[0];
            assert!(min_out >= 2.0 * h.cosine * shape_min - 1e-10);
            checked += 1;
        }
    }
    assert!(checked > 60);
}

#[test]
fn period_of_reflections_matches_transfer_matrix() {
    let scene = Scene::<f64>::standard();
    // Plane wave leaving the midpoint toward body 2.
    let mut w = WavefrontSample::plane(scene.midpoint(), Vec3::unit_x(), 0.0, Sign::Plus);
    for j in [2u8, 1] {
        let RayHit::Hit(h) = scene.body(j).ray_intersect(w.x, w.grad, 1e-8).unwrap() else { panic!() };
        w = reflect_wavefront(&w, &h, j, 1e-8).unwrap();
    }
    w = propagate_wavefront(&w, 1.0).unwrap();
    // Transfer matrix acting on (q, p): half gap, mirror, gap, mirror, half gap.
    let m = |a: [[f64; 2]; 2], b: [[f64; 2]; 2]| {
        [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ]
    };
    let free = |l: f64| [[1.0, l], [0.0, 1.0]];
    let mir = [[1.0, 0.0], [2.0, 1.0]];
    let total = m(free(1.0), m(mir, m(free(2.0), m(mir, free(1.0)))));
    // Plane front: q = 1, p = 0 maps to curvature p'/q'.
    let k = total[1][0] / total[0][0];
    // Half a gap of free flight was already behind the start; undo the leading free(1.0).
    let start_shift = m(free(1.0), m(mir, m(free(2.0), mir)));
    let k_oracle = start_shift[1][0] / start_shift[0][0];
    let got = w.principal_curvatures();
    assert!((got[0] - k_oracle).abs() < 1e-12 && (got[1] - k_oracle).abs() < 1e-12);
    assert!((k - k_oracle).abs() < 1e-12);
    assert!((w.phase - 4.0).abs() < 1e-12 && (w.x - scene.midpoint()).norm() < 1e-12);
}

fn random_query(rng: &mut ChaCha8Rng, scene: &Scene<f64>, len: usize) -> PhaseQuery<f64> {
    let u = scene.u_infinity();
    let g = scene.gap();
    let r = scene.cylinder_radius;
    let rad = r * rng.gen_range(0.0f64..1.0).sqrt() * 0.9;
    let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let x = u.point(g * rng.gen_range(0.1..0.9), rad * ang.cos(), rad * ang.sin());
    let tilt = Vec3::new(0.0, rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15));
    let xi = (scene.axis_e + tilt) * rng.gen_range(0.5..2.0);
    PhaseQuery::new(x, xi, Story::alternating(2, len), source(), Sign::Plus)
}

fn phase_value(scene: &Scene<f64>, q: &PhaseQuery<f64>, x: Vec3<f64>, warm: &[Vec3<f64>]) -> f64 {
    let mut q = q.clone();
    q.x = x;
    evaluate_phase_warm(scene, &q, Some(warm)).unwrap().sample.phase
}

#[test]
fn eikonal_and_fd_gradient() {
    let scene = Scene::<f64>::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let delta = 1e-3;
    let mut admissible = 0;
    for i in 0..120 {
        let q = random_query(&mut rng, &scene, 1 + i % 10);
        let Ok(sol) = evaluate_phase(&scene, &q) else { continue };
        admissible += 1;
        let warm = sol.reflection_points().to_vec();
        assert!((sol.sample.grad.norm() - 1.0).abs() < 1e-12);
        let mut fd = [0.0; 3];
        for (k, e) in [Vec3::unit_x(), Vec3::unit_y(), Vec3::unit_z()].into_iter().enumerate() {
            let f = |s: f64| phase_value(&scene, &q, q.x + e * (s * delta), &warm);
            fd[k] = (f(-2.0) - 8.0 * f(-1.0) + 8.0 * f(1.0) - f(2.0)) / (12.0 * delta);
        }
        let fd = Vec3::new(fd[0], fd[1], fd[2]);
        assert!((fd.norm() - 1.0).abs() < 1e-8, "|grad| = {}", fd.norm());
        assert!((fd - sol.sample.grad).norm() < 1e-8);
        let k = sol.sample.principal_curvatures();
        assert!(k[0] >= -1e-8, "(P1) violated: {k:?}");
    }
    assert!(admissible > 100, "only {admissible} admissible queries");
}

#[test]
fn phase_is_continuous_across_the_last_reflection() {
    let scene = Scene::<f64>::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..60 {
        let q = random_query(&mut rng, &scene, 2 + i % 9);
        let Ok(sol) = evaluate_phase(&scene, &q) else { continue };
        let ray = sol.ray.as_ref().unwrap();
        let pn = *ray.points.last().unwrap();
        let shorter = PhaseQuery { x: pn, story: q.story.without_last(), ..q.clone() };
        let prev = evaluate_phase_warm(&scene, &shorter, Some(&ray.points[..ray.points.len() - 1])).unwrap();
        let last_leg = *ray.legs.last().unwrap();
        assert!((sol.sample.phase - last_leg - prev.sample.phase).abs() < 1e-9);
    }
}

#[test]
fn stories_starting_on_body_one_are_rejected_for_the_plus_wave() {
    let scene = Scene::<f64>::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for i in 0..40 {
        let mut q = random_query(&mut rng, &scene, 1 + i % 6);
        q.story = Story::alternating(1, 1 + i % 6);
        assert!(matches!(evaluate_phase(&scene, &q), Err(Error::Domain(_))));
    }
}

#[test]
fn growth_certificate_shape() {
    let scene = Scene::<f64>::standard();
    let rep = derivative_growth_certificate(&scene, 6, source(), scene.axis_e, 2).unwrap();
    assert_eq!(rep.smallest_defined_len, Some(1));
    assert_eq!(rep.entries.len(), 6);
    for e in &rep.entries {
        assert!((e.m0 - 1.0).abs() < 1e-12);
    }
    // Uniform first x-derivative bound; geometric xi-growth with finite base.
    let dx1: Vec<f64> = rep.entries.iter().map(|e| e.dx1).collect();
    let hi = dx1.iter().cloned().fold(0.0, f64::max);
    assert!(hi < 5.0, "{dx1:?}");
    assert!(rep.slope_dxi1.is_finite() && rep.slope_dxi1 < 5.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn free_flight_keeps_psd_and_shrinks(k1 in 0.0f64..5.0, k2 in 0.0f64..5.0, off in -2.0f64..2.0, tau in 0.0f64..10.0) {
        let mut w = WavefrontSample::<f64>::plane(Vec3::zero(), Vec3::unit_x(), 0.0, Sign::Plus);
        let s = (k1 * k2).sqrt();
        let off = off.clamp(-s, s);
        w.curvature = Mat2::new(k1, off, off, k2);
        let before = w.principal_curvatures();
        let after = propagate_wavefront(&w, tau).unwrap().principal_curvatures();
        prop_assert!(after[0] >= -1e-12);
        prop_assert!(after[1] <= before[1] + 1e-12);
        prop_assert!(after[0] <= before[0] + 1e-12);
    }
}

#[test]
fn property_p_sampling_on_the_standard_scene() {
    let scene = Scene::<f64>::standard();
    for len in [1usize, 2, 5] {
        let rep = raytrap_core::phase::sample_property_p(&scene, &Story::alternating(2, len), source(), scene.axis_e, 40, 3);
        assert!(rep.p1_samples > 30 && rep.p1_min_curvature >= -1e-8, "{rep:?}");
        assert!(rep.p2_samples > 0 && rep.p2_covered == rep.p2_samples, "{rep:?}");
        assert!(rep.p3_samples > 30 && rep.p3_violations == 0, "{rep:?}");
    }
}
