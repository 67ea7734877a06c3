use crate::billiard::{reflect_direction, Story};
use crate::error::{Error, Result};
use crate::geometry::{RayHit, Scene};
use crate::linalg::{solve_dense, Vec3};
use crate::real::Real;

/// How the wave enters the first reflection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Launch<T> {
    /// Plane wave `(z - y)·dir`.
    Plane { y: Vec3<T>, dir: Vec3<T> },
    /// Spherical wave `|z - y|`.
    Point { y: Vec3<T> },
}

/// A broken ray following a story and ending at a given point.
#[derive(Clone, Debug, PartialEq)]
pub struct BrokenRay<T> {
    /// Reflection points `P_1 .. P_n`.
    pub points: Vec<Vec3<T>>,
    pub normals: Vec<Vec3<T>>,
    /// Direction arriving at `P_1`.
    pub incoming: Vec3<T>,
    /// Direction leaving the last reflection (arriving at the endpoint).
    pub outgoing: Vec3<T>,
    /// Leg lengths `|P_2 - P_1|, .., |x - P_n|`.
    pub legs: Vec<T>,
    /// Incidence cosines at each reflection.
    pub cosines: Vec<T>,
    /// Largest `|d_out - reflect(d_in)|` over the reflections.
    pub specular_residual: T,
    /// Distance from the endpoint to the ray re-traced forward from `P_1`.
    pub endpoint_residual: T,
    pub iterations: usize,
    pub seed: usize,
}

impl<T: Real> BrokenRay<T> {
    /// Path length from `P_1` to the endpoint.
    pub fn length_after_first(&self) -> T {
        self.legs.iter().fold(T::zero(), |a, &b| a + b)
    }
}

struct Problem<'a, T> {
    scene: &'a Scene<T>,
    story: &'a Story,
    launch: Launch<T>,
    x: Vec3<T>,
}

impl<'a, T: Real> Problem<'a, T> {
    fn n(&self) -> usize {
        self.story.len()
    }

    fn points(&self, omegas: &[Vec3<T>]) -> Vec<Vec3<T>> {
        self.story
            .indices()
            .iter()
            .zip(omegas)
            .map(|(&j, &w)| self.scene.body(j).radial_point(w))
            .collect()
    }

    fn incoming(&self, p1: Vec3<T>) -> Vec3<T> {
        match self.launch {
            Launch::Plane { dir, .. } => dir,
            Launch::Point { y } => (p1 - y).normalize(),
        }
    }

    /// Directions in and out at each reflection point.
    fn directions(&self, pts: &[Vec3<T>]) -> Vec<(Vec3<T>, Vec3<T>)> {
        let n = pts.len();
        (0..n)
            .map(|i| {
                let d_in = if i == 0 { self.incoming(pts[0]) } else { (pts[i] - pts[i - 1]).normalize() };
                let next = if i + 1 < n { pts[i + 1] } else { self.x };
                (d_in, (next - pts[i]).normalize())
            })
            .collect()
    }

    /// Tangential part of `d_in - d_out` in the chart frame of each point.
    fn residual(&self, omegas: &[Vec3<T>], frames: &[(Vec3<T>, Vec3<T>)]) -> Vec<T> {
        let pts = self.points(omegas);
        let dirs = self.directions(&pts);
        let mut r = Vec::with_capacity(2 * pts.len());
        for (i, &(d_in, d_out)) in dirs.iter().enumerate() {
            let nrm = self.scene.body(self.story.indices()[i]).normal(pts[i]);
            let g = (d_in - d_out).reject(nrm);
            r.push(g.dot(frames[i].0));
            r.push(g.dot(frames[i].1));
        }
        r
    }

    fn newton(&self, mut omegas: Vec<Vec3<T>>, tol: T) -> (Vec<Vec3<T>>, T, usize) {
        let n = self.n();
        let dim = 2 * n;
        let norm = |r: &[T]| r.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        let h = T::epsilon().cbrt();
        let mut iterations = 0;
        let mut frames: Vec<_> = omegas.iter().map(|w| w.orthonormal_pair()).collect();
        let mut rn = norm(&self.residual(&omegas, &frames));
        while iterations < 60 && rn > tol {
            iterations += 1;
            frames = omegas.iter().map(|w| w.orthonormal_pair()).collect();
            let r = self.residual(&omegas, &frames);
            rn = norm(&r);
            if !rn.is_finite() {
                break;
            }
            let mut jac = vec![T::zero(); dim * dim];
            for col in 0..dim {
                let (i, k) = (col / 2, col % 2);
                let e = if k == 0 { frames[i].0 } else { frames[i].1 };
                let mut plus = omegas.clone();
                let mut minus = omegas.clone();
                plus[i] = (omegas[i] + e * h).normalize();
                minus[i] = (omegas[i] - e * h).normalize();
                let rp = self.residual(&plus, &frames);
                let rm = self.residual(&minus, &frames);
                for row in 0..dim {
                    jac[row * dim + col] = (rp[row] - rm[row]) / (h + h);
                }
            }
            let rhs: Vec<T> = r.iter().map(|&v| -v).collect();
            let Some(step) = solve_dense(&jac, &rhs) else { break };
            let mut alpha = T::one();
            let mut accepted = false;
            for _ in 0..30 {
                let trial: Vec<Vec3<T>> = omegas
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| {
                        (w + frames[i].0 * (alpha * step[2 * i]) + frames[i].1 * (alpha * step[2 * i + 1]))
                            .normalize()
                    })
                    .collect();
                let tr = self.residual(&trial, &frames);
                let tn = norm(&tr);
                if tn.is_finite() && tn < rn {
                    omegas = trial;
                    rn = tn;
                    accepted = true;
                    break;
                }
                alpha = alpha * T::lit(0.5);
            }
            if !accepted {
                break;
            }
        }
        (omegas, rn, iterations)
    }
}

/// Initial radial directions: toward the trapped-ray endpoint of each body.
fn base_seed<T: Real>(scene: &Scene<T>, story: &Story) -> Vec<Vec3<T>> {
    story
        .indices()
        .iter()
        .map(|&j| {
            let a = if j == 1 { scene.trapped.a1 } else { scene.trapped.a2 };
            (a - scene.body(j).center()).normalize()
        })
        .collect()
}

fn radial_of<T: Real>(scene: &Scene<T>, story: &Story, pts: &[Vec3<T>]) -> Vec<Vec3<T>> {
    story
        .indices()
        .iter()
        .zip(pts)
        .map(|(&j, &p)| (p - scene.body(j).center()).normalize())
        .collect()
}

/// Solves for the broken ray from the launch to `x` along `story`.
///
/// Seeds: the warm start (if any), the trapped-ray seed, then eight
/// rotations of a transverse offset around it. The first seed whose
/// converged ray is admissible wins.
pub fn solve_broken_ray<T: Real>(
    scene: &Scene<T>,
    story: &Story,
    launch: Launch<T>,
    x: Vec3<T>,
    warm: Option<&[Vec3<T>]>,
) -> Result<BrokenRay<T>> {
    if story.is_empty() {
        return Err(Error::InvalidInput("broken ray needs at least one reflection".into()));
    }
    if scene.body1.level(x) < -T::tol(1e-12) || scene.body2.level(x) < -T::tol(1e-12) {
        return Err(Error::Domain("query point lies inside an obstacle".into()));
    }
    let prob = Problem {
        scene,
        story,
        launch,
        x,
    };
    // Iterate to the round-off floor; acceptance uses the looser tolerance.
    let tol_stop = T::epsilon() * T::lit(4.0);
    let tol_accept = T::tol(scene.tolerances.newton * 1e2);

    let base = base_seed(scene, story);
    let mut seeds: Vec<Vec<Vec3<T>>> = Vec::with_capacity(10);
    if let Some(w) = warm {
        if w.len() == story.len() {
            seeds.push(radial_of(scene, story, w));
        }
    }
    seeds.push(base.clone());
    let delta = T::lit(0.2);
    for k in 0..8 {
        let ang = T::lit(k as f64 * std::f64::consts::FRAC_PI_4);
        seeds.push(
            base.iter()
                .map(|&w| {
                    let (e1, e2) = w.orthonormal_pair();
                    (w + (e1 * ang.cos() + e2 * ang.sin()) * delta).normalize()
                })
                .collect(),
        );
    }

    let mut best_res = T::infinity();
    let mut last_reason = None;
    for (seed_idx, seed) in seeds.into_iter().enumerate() {
        let (omegas, res, iterations) = prob.newton(seed, tol_stop);
        if res < best_res {
            best_res = res;
        }
        if !(res <= tol_accept) {
            continue;
        }
        match assemble(&prob, &omegas, iterations, seed_idx) {
            Ok(ray) => return Ok(ray),
            Err(e) => last_reason = Some(e),
        }
    }
    match last_reason {
        Some(e) => Err(e),
        None => Err(Error::NoConvergence {
            what: "broken-ray Newton solve",
            iterations: 60,
            residual: best_res.to_f64_lossy(),
        }),
    }
}

fn assemble<T: Real>(
    prob: &Problem<'_, T>,
    omegas: &[Vec3<T>],
    iterations: usize,
    seed: usize,
) -> Result<BrokenRay<T>> {
    let scene = prob.scene;
    let pts = prob.points(omegas);
    let dirs = prob.directions(&pts);
    let delta1 = scene.delta1.max(scene.tangency());
    let mut normals = Vec::with_capacity(pts.len());
    let mut cosines = Vec::with_capacity(pts.len());
    let mut specular = T::zero();
    for (i, &(d_in, d_out)) in dirs.iter().enumerate() {
        let n = scene.body(prob.story.indices()[i]).normal(pts[i]);
        let cos_in = -d_in.dot(n);
        if !(cos_in >= delta1) || !(d_out.dot(n) > T::zero()) {
            return Err(Error::Domain(format!(
                "reflection {} is not an admissible incidence (cos = {:e})",
                i + 1,
                cos_in.to_f64_lossy()
            )));
        }
        let r = reflect_direction(d_in, n)?;
        specular = specular.max((r - d_out).norm());
        normals.push(n);
        cosines.push(cos_in);
    }
    let mut legs: Vec<T> = pts.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let last = (prob.x - *pts.last().expect("nonempty")).norm();
    legs.push(last);
    if let Launch::Point { y } = prob.launch {
        if !((pts[0] - y).norm() > T::zero()) {
            return Err(Error::Domain("source lies on the first reflection point".into()));
        }
    }

    // Re-trace forward from just before P_1 and measure the miss at x.
    let mut o = pts[0] - dirs[0].0;
    let mut d = dirs[0].0;
    let mut traced = true;
    for &j in prob.story.indices() {
        match scene.body(j).ray_intersect(o, d, scene.tangency()) {
            Some(RayHit::Hit(h)) => {
                o = h.point();
                d = reflect_direction(d, h.normal())?;
            }
            _ => {
                traced = false;
                break;
            }
        }
    }
    let endpoint_residual = if traced {
        let v = prob.x - o;
        v.reject(d).norm()
    } else {
        T::infinity()
    };

    Ok(BrokenRay {
        incoming: dirs[0].0,
        outgoing: dirs.last().expect("nonempty").1,
        points: pts,
        normals,
        legs,
        cosines,
        specular_residual: specular,
        endpoint_residual,
        iterations,
        seed,
    })
}
