use serde::{Deserialize, Serialize};

use crate::billiard::Story;
use crate::error::Result;
use crate::geometry::Scene;
use crate::linalg::Vec3;
use crate::phase::{evaluate_phase, evaluate_phase_warm, PhaseQuery, PhaseSolution, Sign};
use crate::real::Real;

/// `Lambda phi_J(x, xi)`: the ray-tube area ratio along the broken ray.
///
/// For legs with nonzero Gaussian curvature each factor equals the ratio of
/// wavefront Gaussian curvatures at the two ends of the leg; the tube form
/// stays finite for the plane legs where that ratio is 0/0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProduct {
    pub story: Vec<u8>,
    pub value: f64,
    /// One factor per leg after a reflection, in forward order.
    pub factors: Vec<f64>,
}

impl CurvatureProduct {
    pub fn from_solution<T: Real>(story: &Story, sol: &PhaseSolution<T>) -> Self {
        let factors: Vec<f64> = sol.leg_factors.iter().map(|f| f.to_f64_lossy()).collect();
        Self {
            story: story.indices().to_vec(),
            value: factors.iter().product(),
            factors,
        }
    }

    /// Product of the first `k` factors.
    pub fn partial(&self, k: usize) -> f64 {
        self.factors[..k].iter().product()
    }
}

pub fn curvature_product<T: Real>(
    scene: &Scene<T>,
    x: Vec3<T>,
    xi: Vec3<T>,
    story: &Story,
    y: Vec3<T>,
    sign: Sign,
) -> Result<CurvatureProduct> {
    curvature_product_warm(scene, x, xi, story, y, sign, None).map(|(c, _)| c)
}

pub fn curvature_product_warm<T: Real>(
    scene: &Scene<T>,
    x: Vec3<T>,
    xi: Vec3<T>,
    story: &Story,
    y: Vec3<T>,
    sign: Sign,
    warm: Option<&[Vec3<T>]>,
) -> Result<(CurvatureProduct, PhaseSolution<T>)> {
    let q = PhaseQuery::new(x, xi, story.clone(), y, sign);
    let sol = match warm {
        Some(w) => evaluate_phase_warm(scene, &q, Some(w))?,
        None => evaluate_phase(scene, &q)?,
    };
    Ok((CurvatureProduct::from_solution(story, &sol), sol))
}
