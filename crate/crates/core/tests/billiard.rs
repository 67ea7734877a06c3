use proptest::prelude::*;
use raytrap_core::billiard::{
    backward_flow_constrained, flow, reflect_direction, return_map, PhasePoint, Story,
};
use raytrap_core::geometry::Scene;
use raytrap_core::linalg::Vec3;

type M2 = [[f64; 2]; 2];

fn mm(a: M2, b: M2) -> M2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn free(l: f64) -> M2 {
    [[1.0, l], [0.0, 1.0]]
}

// Dispersing mirror of radius r at normal incidence, world-fixed transverse frame.
fn mirror(r: f64) -> M2 {
    [[1.0, 0.0], [2.0 / r, 1.0]]
}

/// Midpoint-to-midpoint period map of two unit spheres with centres `dist` apart.
fn transfer_oracle(dist: f64) -> M2 {
    let gap = dist - 2.0;
    let half = free(gap / 2.0);
    [half, mirror(1.0), free(gap), mirror(1.0), half]
        .into_iter()
        .rev()
        .fold([[1.0, 0.0], [0.0, 1.0]], |acc, m| mm(m, acc))
}

#[test]
fn return_map_matches_ray_transfer_matrices() {
    let scene = Scene::<f64>::standard();
    let rm = return_map(&scene).unwrap();
    let oracle = transfer_oracle(4.0);
    // (q1, p1) block sits at indices (0, 2); (q2, p2) at (1, 3).
    for (a, b) in [(0usize, 2usize), (1, 3)] {
        let got = [
            [rm.monodromy[a][a], rm.monodromy[a][b]],
            [rm.monodromy[b][a], rm.monodromy[b][b]],
        ];
        for i in 0..2 {
            for j in 0..2 {
                let rel = (got[i][j] - oracle[i][j]).abs() / oracle[i][j].abs().max(1.0);
                assert!(rel < 1e-4, "block entry ({i},{j}): {} vs {}", got[i][j], oracle[i][j]);
            }
        }
    }
    let big = (3.0 + 2.0 * 2f64.sqrt()).powi(2);
    let lam = (3.0 - 2.0 * 2f64.sqrt()).powi(4);
    assert!((rm.mu_max - big).abs() / big < 1e-4);
    assert!((rm.lambda - lam).abs() / lam < 1e-4);
    assert!((rm.period - 4.0).abs() < 1e-12);
    for d in rm.block_dets {
        assert!((d - 1.0).abs() < 1e-8);
    }
    // Reciprocal pairing.
    assert!((rm.eigenvalues[0] * rm.eigenvalues[3] - 1.0).abs() < 1e-6);
    assert!((rm.eigenvalues[1] * rm.eigenvalues[2] - 1.0).abs() < 1e-6);
}

#[test]
fn wider_separation_contracts_more() {
    let near = return_map(&Scene::<f64>::standard()).unwrap();
    let far = return_map(&Scene::<f64>::two_spheres(10.0, 0.5).unwrap()).unwrap();
    let m = transfer_oracle(10.0);
    let tr = m[0][0] + m[1][1];
    let small = (tr - (tr * tr - 4.0).sqrt()) / 2.0;
    assert!(far.lambda < near.lambda);
    assert!((far.lambda - small * small).abs() / (small * small) < 1e-3);
}

#[test]
fn escape_time_grows_like_the_log_of_the_offset() {
    let scene = Scene::<f64>::standard();
    let rm = return_map(&scene).unwrap();
    let times: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&d| {
            let p = PhasePoint::new(Vec3::new(2.0, d, 0.0), Vec3::unit_x());
            let tr = flow(&scene, p, 80.0).unwrap();
            assert!(tr.escaped);
            (-(d as f64).ln(), tr.escape_time.unwrap())
        })
        .collect();
    let n = times.len() as f64;
    let (mx, my) = (
        times.iter().map(|p| p.0).sum::<f64>() / n,
        times.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let slope = times.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / times.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let predicted = rm.period / rm.mu_max.ln();
    assert!((slope - predicted).abs() / predicted < 0.1, "slope {slope} vs {predicted}");
}

/// Independent masked tracer for spheres: reflect only on the listed bodies in order.
fn masked_sphere_trace(
    centers: [Vec3<f64>; 2],
    mut x: Vec3<f64>,
    mut d: Vec3<f64>,
    order: &[u8],
    mut t: f64,
) -> Vec3<f64> {
    for &j in order {
        let c = centers[(j - 1) as usize];
        let o = x - c;
        let b = o.dot(d);
        let disc = b * b - (o.norm_sq() - 1.0);
        if disc <= 0.0 || b >= 0.0 {
            break;
        }
        let s = -b - disc.sqrt();
        if s <= 0.0 || s > t {
            break;
        }
        x = x + d * s;
        t -= s;
        let n = (x - c).normalize();
        d = d - n * (2.0 * d.dot(n));
    }
    x + d * t
}

#[test]
fn backward_flow_matches_masked_time_reversed_trace() {
    let scene = Scene::<f64>::standard();
    let centers = [Vec3::zero(), Vec3::new(4.0, 0.0, 0.0)];
    let cases = [
        (Vec3::new(2.0, 0.1, -0.05), Vec3::new(-1.0, 0.02, 0.01), Story::new(vec![2, 1, 2]).unwrap(), 7.3),
        (Vec3::new(1.7, -0.2, 0.1), Vec3::new(1.0, 0.05, -0.03), Story::new(vec![2, 1]).unwrap(), 3.1),
        (Vec3::new(2.3, 0.0, 0.2), Vec3::new(1.0, 0.0, 0.0), Story::new(vec![1]).unwrap(), 5.0),
    ];
    for (x, g, story, t) in cases {
        let g = g.normalize();
        let got = backward_flow_constrained(&scene, x, g, &story, t).unwrap();
        let mut order: Vec<u8> = story.indices().to_vec();
        order.reverse();
        let want = masked_sphere_trace(centers, x, -g, &order, t);
        assert!((got.point - want).norm() < 1e-12, "{got:?} vs {want:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_identities(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0,
                             p in -1.0f64..1.0, q in -1.0f64..1.0, r in -1.0f64..1.0) {
        let xi = Vec3::new(a, b, c);
        let n = Vec3::new(p, q, r);
        prop_assume!(xi.norm() > 0.1 && n.norm() > 0.1);
        let (xi, n) = (xi.normalize(), n.normalize());
        prop_assume!(xi.dot(n) < -1e-6);
        let out = reflect_direction(xi, n).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-14);
        prop_assert!((out.dot(n) + xi.dot(n)).abs() < 1e-14);
        prop_assert!((out.reject(n) - xi.reject(n)).norm() < 1e-14);
    }

    #[test]
    fn flow_is_reversible_and_alternating(y in -0.4f64..0.4, z in -0.4f64..0.4,
                                          dy in -0.3f64..0.3, dz in -0.3f64..0.3,
                                          t in 0.5f64..12.0) {
        let scene = Scene::<f64>::standard();
        let p = PhasePoint::new(Vec3::new(2.0, y, z), Vec3::new(1.0, dy, dz));
        let tr = flow(&scene, p, t).unwrap();
        prop_assume!(!tr.tangential);
        prop_assert!((tr.final_state.xi.norm() - 1.0).abs() < 1e-12);
        prop_assert!(tr.story.indices().windows(2).all(|w| w[0] != w[1]));
        prop_assert!(tr.events.windows(2).all(|w| w[0].time < w[1].time));
        for w in tr.events.windows(2) {
            let seg = (w[1].point - w[0].point).norm();
            prop_assert!((seg - (w[1].time - w[0].time)).abs() < 1e-10);
        }
        let back = flow(&scene, tr.final_state.reversed(), t).unwrap();
        prop_assume!(!back.tangential);
        prop_assert!((back.final_state.x - p.x).norm() < 1e-8);
    }
}
