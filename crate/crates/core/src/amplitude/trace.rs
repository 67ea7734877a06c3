use crate::billiard::Story;
use crate::error::{Error, Result};
use crate::geometry::{Hit, Scene};
use crate::linalg::{Mat2, Vec3};
use crate::phase::{evaluate_phase_warm, propagate_wavefront, reflect_wavefront, PhaseQuery, Sign, WavefrontSample};

/// A reflected phase solved at one point, with what the transport formulas
/// need: the broken ray, the wavefront curvature after each reflection, and
/// `Lambda phi_J`.
#[derive(Clone, Debug)]
pub struct TracedPhase {
    pub story: Story,
    pub sign: Sign,
    pub x: Vec3<f64>,
    pub xi: Vec3<f64>,
    /// Direction of the incident plane wave.
    pub dir: Vec3<f64>,
    pub phase: f64,
    pub grad: Vec3<f64>,
    /// Reflection points `P_1 .. P_n`.
    pub points: Vec<Vec3<f64>>,
    /// `|P_2 - P_1|, .., |x - P_n|`.
    pub legs: Vec<f64>,
    /// Wavefront curvature leaving each reflection point.
    pub curvatures: Vec<Mat2<f64>>,
    pub lambda: f64,
}

impl TracedPhase {
    pub fn solve(
        scene: &Scene<f64>,
        x: Vec3<f64>,
        xi: Vec3<f64>,
        story: &Story,
        y: Vec3<f64>,
        sign: Sign,
        warm: Option<&[Vec3<f64>]>,
    ) -> Result<Self> {
        let q = PhaseQuery::new(x, xi, story.clone(), y, sign);
        let dir = q.wave_dir();
        let sol = evaluate_phase_warm(scene, &q, warm)?;
        let Some(ray) = sol.ray.as_ref() else {
            return Ok(Self {
                story: story.clone(),
                sign,
                x,
                xi,
                dir,
                phase: sol.sample.phase,
                grad: sol.sample.grad,
                points: Vec::new(),
                legs: Vec::new(),
                curvatures: Vec::new(),
                lambda: 1.0,
            });
        };
        // Re-run the reflections to keep the curvature leaving each point.
        let mut w = WavefrontSample::plane(ray.points[0], dir, 0.0, sign);
        let mut curvatures = Vec::with_capacity(story.len());
        for (i, &j) in story.indices().iter().enumerate() {
            let hit = Hit {
                surface: scene.body(j).surface_at(ray.points[i]),
                length: 0.0,
                cosine: ray.cosines[i],
            };
            w.x = ray.points[i];
            w = reflect_wavefront(&w, &hit, j, scene.tangency())?;
            curvatures.push(w.curvature);
            w = propagate_wavefront(&w, ray.legs[i])?;
        }
        Ok(Self {
            story: story.clone(),
            sign,
            x,
            xi,
            dir,
            phase: sol.sample.phase,
            grad: sol.sample.grad,
            points: ray.points.clone(),
            legs: ray.legs.clone(),
            curvatures,
            lambda: sol.leg_factors.iter().product(),
        })
    }

    /// Path length from `P_1` to `x`.
    pub fn l_j(&self) -> f64 {
        self.legs.iter().sum()
    }

    /// Unit direction of leg `i` (leaving `P_i`).
    fn leg_dir(&self, i: usize) -> Vec3<f64> {
        let end = self.points.get(i + 1).copied().unwrap_or(self.x);
        (end - self.points[i]).normalize()
    }

    /// Walks back `tau` along the ray: returns the number of reflections
    /// undone and, for the leg reached, its index and the distance from its
    /// start. `None` for the leg means the point lies before `P_1`.
    fn locate(&self, tau: f64) -> (usize, Option<(usize, f64)>, f64) {
        let mut rest = tau;
        let n = self.legs.len();
        for i in (0..n).rev() {
            if rest <= self.legs[i] {
                return (n - 1 - i, Some((i, self.legs[i] - rest)), 0.0);
            }
            rest -= self.legs[i];
        }
        (n, None, rest)
    }

    /// `X^_{-tau}(x, grad phi_J)`: backward flow along the ray, continued in a
    /// straight line before the first reflection.
    pub fn backward_point(&self, tau: f64) -> Vec3<f64> {
        if self.points.is_empty() {
            return self.x - self.dir * tau;
        }
        match self.locate(tau) {
            (_, Some((i, a)), _) => self.points[i] + self.leg_dir(i) * a,
            (_, None, rest) => self.points[0] - self.dir * rest,
        }
    }

    /// `J(x, tau, xi)`: the reflections not yet undone after going back `tau`.
    pub fn remaining_story(&self, tau: f64) -> Story {
        let (undone, _, _) = self.locate(tau);
        let keep = self.story.len() - undone;
        Story::new(self.story.indices()[..keep].to_vec()).expect("prefix of a valid story")
    }

    /// Reflection points of the remaining story, for warm starts.
    pub fn remaining_points(&self, tau: f64) -> &[Vec3<f64>] {
        let (undone, _, _) = self.locate(tau);
        &self.points[..self.points.len() - undone]
    }

    /// `g_{phi_J}(x, tau)`: ray-tube ratio between `X^_{-tau}` and `x`.
    /// Equals `Lambda phi_J` once every reflection is undone.
    pub fn partial_product(&self, tau: f64) -> f64 {
        let (_, reached, _) = self.locate(tau);
        let first = reached.map_or(0, |(i, _)| i);
        let mut g = 1.0;
        for i in first..self.legs.len() {
            let a = match reached {
                Some((j, a)) if j == i => a,
                _ => 0.0,
            };
            g *= spread(&self.curvatures[i], a) / spread(&self.curvatures[i], self.legs[i]);
        }
        g
    }
}

/// Cross-section growth `det(I + s Q)` after free flight `s`.
fn spread(q: &Mat2<f64>, s: f64) -> f64 {
    Mat2::identity().add(&q.scale(s)).det()
}

/// Phases that cannot be solved at a point are outside `U_J(phi)`, where the
/// terms vanish.
pub(crate) fn outside_domain(e: &Error) -> bool {
    matches!(
        e,
        Error::Domain(_) | Error::NoConvergence { .. } | Error::Tangential { .. } | Error::NotIncoming(_) | Error::Focal(_)
    )
}
