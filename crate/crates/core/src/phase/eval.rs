use super::solver::{solve_broken_ray, BrokenRay, Launch};
use super::wavefront::{propagate_wavefront, reflect_wavefront, Sign, WavefrontSample};
use crate::billiard::Story;
use crate::error::{Error, Result};
use crate::geometry::{Hit, Scene};
use crate::linalg::Vec3;
use crate::real::Real;

/// Half-angle cosine of the admissible cone of directions about `±e`.
pub const DEFAULT_CONE_COS: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseQuery<T> {
    pub x: Vec3<T>,
    pub xi: Vec3<T>,
    pub story: Story,
    pub y: Vec3<T>,
    pub sign: Sign,
}

impl<T: Real> PhaseQuery<T> {
    pub fn new(x: Vec3<T>, xi: Vec3<T>, story: Story, y: Vec3<T>, sign: Sign) -> Self {
        Self { x, xi, story, y, sign }
    }

    /// Direction of travel of the incident plane wave.
    pub fn wave_dir(&self) -> Vec3<T> {
        self.sign.apply(self.xi.normalize())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSolution<T> {
    pub sample: WavefrontSample<T>,
    /// `None` for the empty story.
    pub ray: Option<BrokenRay<T>>,
    /// Per-leg cross-section ratios after each reflection (product = `sample.pencil`).
    pub leg_factors: Vec<T>,
}

impl<T: Real> PhaseSolution<T> {
    /// `X^{-|J|}`: the first reflection point, or the point itself for the empty story.
    pub fn first_point(&self) -> Vec3<T> {
        self.ray
            .as_ref()
            .map_or(self.sample.x, |r| r.points[0])
    }

    pub fn reflection_points(&self) -> &[Vec3<T>] {
        self.ray.as_ref().map_or(&[], |r| r.points.as_slice())
    }
}

pub fn evaluate_phase<T: Real>(scene: &Scene<T>, q: &PhaseQuery<T>) -> Result<PhaseSolution<T>> {
    evaluate_phase_warm(scene, q, None)
}

/// `phi_J^±(x, xi)` with its gradient, curvature and curvature product.
/// `warm` are reflection points of a nearby solution.
pub fn evaluate_phase_warm<T: Real>(
    scene: &Scene<T>,
    q: &PhaseQuery<T>,
    warm: Option<&[Vec3<T>]>,
) -> Result<PhaseSolution<T>> {
    if !(q.xi.norm() > T::zero()) {
        return Err(Error::InvalidInput("xi must be nonzero".into()));
    }
    let dir = q.wave_dir();
    if dir.dot(scene.axis_e).abs() < T::lit(DEFAULT_CONE_COS) {
        return Err(Error::Domain("direction outside the admissible cone about ±e".into()));
    }
    if q.story.is_empty() {
        let phase = (q.x - q.y).dot(dir);
        return Ok(PhaseSolution {
            sample: WavefrontSample::plane(q.x, dir, phase, q.sign),
            ray: None,
            leg_factors: Vec::new(),
        });
    }
    let ray = solve_broken_ray(scene, &q.story, Launch::Plane { y: q.y, dir }, q.x, warm)?;
    let (sample, leg_factors) = transport_along(scene, &q.story, &ray, q.y, dir, q.x, q.sign)?;
    Ok(PhaseSolution {
        sample,
        ray: Some(ray),
        leg_factors,
    })
}

/// Carries a plane wavefront along a solved broken ray.
pub(crate) fn transport_along<T: Real>(
    scene: &Scene<T>,
    story: &Story,
    ray: &BrokenRay<T>,
    y: Vec3<T>,
    dir: Vec3<T>,
    x: Vec3<T>,
    sign: Sign,
) -> Result<(WavefrontSample<T>, Vec<T>)> {
    let p1 = ray.points[0];
    let mut w = WavefrontSample::plane(p1, dir, (p1 - y).dot(dir), sign);
    let mut factors = Vec::with_capacity(story.len());
    for (i, &j) in story.indices().iter().enumerate() {
        let hit = Hit {
            surface: scene.body(j).surface_at(ray.points[i]),
            length: T::zero(),
            cosine: ray.cosines[i],
        };
        w.x = ray.points[i];
        w = reflect_wavefront(&w, &hit, j, scene.tangency())?;
        let before = w.pencil;
        w = propagate_wavefront(&w, ray.legs[i])?;
        factors.push(w.pencil / before);
    }
    // Exact endpoint and direction from the solved geometry.
    w.x = x;
    w.grad = ray.outgoing;
    let f1 = w.frame[0].reject(w.grad).normalize();
    w.frame = [f1, w.grad.cross(f1)];
    let legs_sum = ray.length_after_first();
    w.phase = (p1 - y).dot(dir) + legs_sum;
    w.l_j = legs_sum;
    Ok((w, factors))
}
