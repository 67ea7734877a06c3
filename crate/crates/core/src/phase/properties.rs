use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eval::{evaluate_phase, PhaseQuery};
use super::wavefront::Sign;
use crate::billiard::Story;
use crate::geometry::Scene;
use crate::linalg::Vec3;

/// Sampled falsification checks of property (P) for one reflected phase.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropertySampling {
    /// Smallest principal curvature seen (P1).
    pub p1_min_curvature: f64,
    pub p1_samples: usize,
    /// Boundary points of the next obstacle, facing the last one, inside the cylinder.
    pub p2_samples: usize,
    /// How many of them the phase reaches along an outgoing ray (P2).
    pub p2_covered: usize,
    /// Midpoint triples tested for quasi-convexity (P3).
    pub p3_samples: usize,
    pub p3_violations: usize,
}

/// Checks (P1) on random points of `U_inf`, (P2) on the facing cap of the
/// obstacle after the last reflection, and (P3) via
/// `phi((a+b)/2) <= max(phi(a), phi(b))` on random pairs.
pub fn sample_property_p(
    scene: &Scene<f64>,
    story: &Story,
    y: Vec3<f64>,
    xi: Vec3<f64>,
    samples: usize,
    seed: u64,
) -> PropertySampling {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = scene.u_infinity();
    let g = scene.gap();
    let r = scene.cylinder_radius;
    let random_point = |rng: &mut ChaCha8Rng| {
        let rad = r * rng.gen_range(0.0f64..1.0).sqrt();
        let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        u.point(g * rng.gen_range(0.02..0.98), rad * ang.cos(), rad * ang.sin())
    };
    let query = |x: Vec3<f64>| PhaseQuery::new(x, xi, story.clone(), y, Sign::Plus);

    let mut out = PropertySampling {
        p1_min_curvature: f64::INFINITY,
        p1_samples: 0,
        p2_samples: 0,
        p2_covered: 0,
        p3_samples: 0,
        p3_violations: 0,
    };
    for _ in 0..samples {
        let x = random_point(&mut rng);
        if let Ok(sol) = evaluate_phase(scene, &query(x)) {
            out.p1_samples += 1;
            out.p1_min_curvature = out.p1_min_curvature.min(sol.sample.principal_curvatures()[0]);
        }
        let (a, b) = (random_point(&mut rng), random_point(&mut rng));
        let vals: Vec<Option<f64>> = [a, b, (a + b) * 0.5]
            .iter()
            .map(|&p| evaluate_phase(scene, &query(p)).ok().map(|s| s.sample.phase))
            .collect();
        if let [Some(fa), Some(fb), Some(fm)] = vals[..] {
            out.p3_samples += 1;
            if fm > fa.max(fb) + 1e-12 {
                out.p3_violations += 1;
            }
        }
    }
    if let Some(last) = story.last() {
        let region = scene.default_region();
        let next = scene.body(3 - last);
        for p in next.boundary_samples(samples.max(16) * 8) {
            if !region.contains(p) || next.normal(p).dot(scene.body(last).center() - p) <= 0.0 {
                continue;
            }
            out.p2_samples += 1;
            if let Ok(sol) = evaluate_phase(scene, &query(p)) {
                if sol.ray.as_ref().is_some_and(|ray| ray.cosines[ray.cosines.len() - 1] > 0.0) {
                    out.p2_covered += 1;
                }
            }
        }
    }
    out
}
