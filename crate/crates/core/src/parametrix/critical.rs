use serde::{Deserialize, Serialize};

use crate::billiard::Story;
use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::linalg::{Mat2, Vec3};
use crate::phase::{evaluate_phase_warm, PhaseQuery, Sign};
use crate::real::Real;

/// Stationary point of `xi -> phi_J(x, xi) - t|xi|` on the sphere `|xi| = s`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StationaryPhaseData {
    pub story: Vec<u8>,
    pub sign: Sign,
    pub s: f64,
    /// Direction of travel of the incident wave; `xi = sign · s · dir`.
    pub dir: [f64; 3],
    pub xi: [f64; 3],
    /// `X^{-|J|}`: first reflection point, or `x` for the empty story.
    pub first_point: [f64; 3],
    pub phase: f64,
    pub l_j: f64,
    /// `(X^{-|J|} - y)·dir`, positive for the selected point.
    pub selection: f64,
    /// Restricted Hessian on the unit sphere, in the frame `frame`.
    pub hessian: Mat2<f64>,
    pub frame: [[f64; 3]; 2],
    pub det: f64,
    /// Number of positive minus negative eigenvalues.
    pub signature: i32,
    /// `|P_T (X^{-|J|} - y)|` at the returned point.
    pub residual: f64,
    /// Size of the antisymmetric part before symmetrizing.
    pub asymmetry: f64,
    pub degenerate: bool,
    pub iterations: usize,
}

impl StationaryPhaseData {
    /// Hessian on the sphere of radius `s`.
    pub fn hessian_at_radius(&self) -> Mat2<f64> {
        self.hessian.scale(1.0 / self.s)
    }

    /// Lagrange multiplier `2 lambda(t)` of `phi_J - t|xi|` on the shell.
    pub fn multiplier(&self, t: f64) -> f64 {
        (self.selection - (t - self.l_j)) / self.s
    }
}

/// Result of the generic solve, before conversion.
#[derive(Clone, Debug)]
pub struct CriticalPoint<T> {
    pub dir: Vec3<T>,
    pub first_point: Vec3<T>,
    pub phase: T,
    pub frame: (Vec3<T>, Vec3<T>),
    pub hessian: Mat2<T>,
    pub residual: T,
    pub asymmetry: T,
    pub iterations: usize,
}

/// Below this `|det|` a restricted Hessian is flagged.
pub const DEGENERATE_DET: f64 = 1e-8;
const MAX_NEWTON: usize = 60;

struct Eval<T> {
    p1: Vec3<T>,
    phase: T,
    warm: Vec<Vec3<T>>,
}

fn eval_dir<T: Real>(
    scene: &Scene<T>,
    x: Vec3<T>,
    y: Vec3<T>,
    story: &Story,
    dir: Vec3<T>,
    warm: Option<&[Vec3<T>]>,
) -> Result<Eval<T>> {
    let q = PhaseQuery::new(x, dir, story.clone(), y, Sign::Plus);
    let sol = evaluate_phase_warm(scene, &q, warm)?;
    Ok(Eval {
        p1: sol.first_point(),
        phase: sol.sample.phase,
        warm: sol.reflection_points().to_vec(),
    })
}

/// Unit vector of the gnomonic chart centred at `e0`.
fn chart<T: Real>(e0: Vec3<T>, u: (Vec3<T>, Vec3<T>), c: [T; 2]) -> Vec3<T> {
    (e0 + u.0 * c[0] + u.1 * c[1]).normalize()
}

/// Tangential components of `X^{-|J|} - y` in the frame at `dir`.
fn tangential<T: Real>(v: Vec3<T>, u: (Vec3<T>, Vec3<T>)) -> [T; 2] {
    [v.dot(u.0), v.dot(u.1)]
}

/// Newton for `P_T(X^{-|J|}(x, dir) - y) = 0` from `seed`, re-centring the
/// chart at every step.
pub fn newton_on_sphere<T: Real>(
    scene: &Scene<T>,
    x: Vec3<T>,
    y: Vec3<T>,
    story: &Story,
    seed: Vec3<T>,
) -> Result<CriticalPoint<T>> {
    let tol = T::tol(1e-10);
    let step = T::tol(1e-7).max(T::epsilon().sqrt() * T::lit(10.0));
    let mut dir = seed.normalize();
    let mut cur = eval_dir(scene, x, y, story, dir, None)?;
    let mut iterations = 0;
    loop {
        let u = dir.orthonormal_pair();
        let v = cur.p1 - y;
        let r = tangential(v, u);
        let norm = (r[0] * r[0] + r[1] * r[1]).sqrt();
        if norm < tol {
            break;
        }
        if iterations >= MAX_NEWTON {
            return Err(Error::NoConvergence {
                what: "critical direction",
                iterations,
                residual: norm.to_f64_lossy(),
            });
        }
        iterations += 1;
        // Jacobian of c -> (X(dir(c)) - y)·u_i - c_i (X(dir(c)) - y)·dir.
        let mut jac = [[T::zero(); 2]; 2];
        for j in 0..2 {
            let mut cp = [T::zero(); 2];
            cp[j] = step;
            let mut cm = [T::zero(); 2];
            cm[j] = -step;
            let rp = {
                let p = eval_dir(scene, x, y, story, chart(dir, u, cp), Some(&cur.warm))?.p1 - y;
                [p.dot(u.0) - cp[0] * p.dot(dir), p.dot(u.1) - cp[1] * p.dot(dir)]
            };
            let rm = {
                let p = eval_dir(scene, x, y, story, chart(dir, u, cm), Some(&cur.warm))?.p1 - y;
                [p.dot(u.0) - cm[0] * p.dot(dir), p.dot(u.1) - cm[1] * p.dot(dir)]
            };
            for i in 0..2 {
                jac[i][j] = (rp[i] - rm[i]) / (step + step);
            }
        }
        let m = Mat2 { a: jac[0][0], b: jac[0][1], c: jac[1][0], d: jac[1][1] };
        let inv = m
            .inverse()
            .ok_or_else(|| Error::Degenerate("singular Jacobian in the critical-point Newton".into()))?;
        let dc = inv.apply(r);
        let mut damp = T::one();
        loop {
            let cand = chart(dir, u, [-dc[0] * damp, -dc[1] * damp]);
            let next = eval_dir(scene, x, y, story, cand, Some(&cur.warm));
            if let Ok(next) = next {
                let nr = tangential(next.p1 - y, cand.orthonormal_pair());
                if (nr[0] * nr[0] + nr[1] * nr[1]).sqrt() < norm || damp < T::lit(1e-3) {
                    dir = cand;
                    cur = next;
                    break;
                }
            }
            damp = damp * T::lit(0.5);
            if damp < T::lit(1e-4) {
                return Err(Error::NoConvergence {
                    what: "critical direction (line search)",
                    iterations,
                    residual: norm.to_f64_lossy(),
                });
            }
        }
    }
    let u = dir.orthonormal_pair();
    let v = cur.p1 - y;
    let r = tangential(v, u);
    let residual = (r[0] * r[0] + r[1] * r[1]).sqrt();
    let (hessian, asymmetry) = lagrange_hessian(scene, x, y, story, dir, u, &cur)?;
    Ok(CriticalPoint {
        dir,
        first_point: cur.p1,
        phase: cur.phase,
        frame: u,
        hessian,
        residual,
        asymmetry,
        iterations,
    })
}

/// `P_T D_dir X^{-|J|} P_T - ((X^{-|J|} - y)·dir) I`: the Hessian of
/// `dir -> phi_J(x, dir)` restricted to the unit sphere, with the tangential
/// derivative by central differences.
fn lagrange_hessian<T: Real>(
    scene: &Scene<T>,
    x: Vec3<T>,
    y: Vec3<T>,
    story: &Story,
    dir: Vec3<T>,
    u: (Vec3<T>, Vec3<T>),
    at: &Eval<T>,
) -> Result<(Mat2<T>, T)> {
    let normal = (at.p1 - y).dot(dir);
    if story.is_empty() {
        return Ok((Mat2::scalar(-normal), T::zero()));
    }
    let step = T::tol(1e-7).max(T::epsilon().sqrt() * T::lit(10.0));
    let mut d = [Vec3::zero(); 2];
    for (j, dj) in d.iter_mut().enumerate() {
        let mut cp = [T::zero(); 2];
        cp[j] = step;
        let cm = [-cp[0], -cp[1]];
        let p = eval_dir(scene, x, y, story, chart(dir, u, cp), Some(&at.warm))?.p1;
        let m = eval_dir(scene, x, y, story, chart(dir, u, cm), Some(&at.warm))?.p1;
        *dj = (p - m) / (step + step);
    }
    let raw = Mat2 {
        a: u.0.dot(d[0]) - normal,
        b: u.0.dot(d[1]),
        c: u.1.dot(d[0]),
        d: u.1.dot(d[1]) - normal,
    };
    let asym = (raw.b - raw.c).abs();
    Ok((raw.symmetrize(), asym))
}

/// Hessian of `c -> phi_J(x, dir(c))` in the gnomonic chart at `dir` by
/// central second differences. At a critical point it equals the restricted
/// Hessian; this is the independent check of the Lagrange formula.
pub fn chart_hessian<T: Real>(
    scene: &Scene<T>,
    x: Vec3<T>,
    y: Vec3<T>,
    story: &Story,
    dir: Vec3<T>,
    frame: (Vec3<T>, Vec3<T>),
    step: T,
) -> Result<Mat2<T>> {
    let f = |c: [T; 2]| -> Result<T> { Ok(eval_dir(scene, x, y, story, chart(dir, frame, c), None)?.phase) };
    let z = T::zero();
    let f0 = f([z, z])?;
    let two = T::lit(2.0);
    let h2 = step * step;
    let faa = (f([step, z])? + f([-step, z])? - two * f0) / h2;
    let fbb = (f([z, step])? + f([z, -step])? - two * f0) / h2;
    let fab = (f([step, step])? - f([step, -step])? - f([-step, step])? + f([-step, -step])?) / (T::lit(4.0) * h2);
    Ok(Mat2 { a: faa, b: fab, c: fab, d: fbb })
}

/// Seeds of the two charts: the axis direction towards the first body, then
/// the direction from `y` to where that seed lands.
fn seeds<T: Real>(scene: &Scene<T>, x: Vec3<T>, y: Vec3<T>, story: &Story) -> Vec<Vec3<T>> {
    let e = scene.axis_e;
    let e0 = if story.indices()[0] == 2 { e } else { -e };
    let mut out = vec![e0];
    if let Ok(ev) = eval_dir(scene, x, y, story, e0, None) {
        let d = ev.p1 - y;
        if d.norm() > T::zero() {
            out.push(d.normalize());
        }
    }
    out
}

/// The critical direction of `phi_J(x, ·)` on the shell with the positivity
/// selection `(X^{-|J|} - y)·dir > 0`.
#[allow(clippy::too_many_arguments)]
pub fn critical_point_generic<T: Real>(
    scene: &Scene<T>,
    x: Vec3<T>,
    y: Vec3<T>,
    story: &Story,
) -> Result<CriticalPoint<T>> {
    if story.is_empty() {
        let v = x - y;
        if !(v.norm() > T::zero()) {
            return Err(Error::Domain("x coincides with the source".into()));
        }
        let dir = v.normalize();
        let frame = dir.orthonormal_pair();
        let r = v.norm();
        return Ok(CriticalPoint {
            dir,
            first_point: x,
            phase: r,
            frame,
            hessian: Mat2::scalar(-r),
            residual: T::zero(),
            asymmetry: T::zero(),
            iterations: 0,
        });
    }
    let mut last = None;
    for seed in seeds(scene, x, y, story) {
        match newton_on_sphere(scene, x, y, story, seed) {
            Ok(cp) if (cp.first_point - y).dot(cp.dir) > T::zero() => return Ok(cp),
            Ok(_) => last = Some(Error::Domain("critical direction fails the positivity selection".into())),
            Err(e) => last = Some(e),
        }
    }
    Err(Error::Domain(format!(
        "no chart seed reached a selected critical direction ({})",
        last.map_or_else(|| "no seeds".into(), |e| e.to_string())
    )))
}

/// `critical_point` in `f64` with the near-source exclusion `eta`: returns
/// `Ok(None)` when `d(X^{-|J|}, y) < eta`.
#[allow(clippy::too_many_arguments)]
pub fn critical_point(
    scene: &Scene<f64>,
    x: Vec3<f64>,
    y: Vec3<f64>,
    story: &Story,
    s: f64,
    sign: Sign,
    eta: f64,
) -> Result<Option<StationaryPhaseData>> {
    if !(s > 0.0) {
        return Err(Error::InvalidInput("shell radius must be positive".into()));
    }
    if story.is_empty() && (x - y).norm() < eta {
        return Ok(None);
    }
    let cp = critical_point_generic(scene, x, y, story)?;
    if (cp.first_point - y).norm() < eta {
        return Ok(None);
    }
    let selection = (cp.first_point - y).dot(cp.dir);
    let ev = cp.hessian.sym_eigenvalues();
    let det = cp.hessian.det();
    Ok(Some(StationaryPhaseData {
        story: story.indices().to_vec(),
        sign,
        s,
        dir: cp.dir.to_f64(),
        xi: (sign.apply(cp.dir) * s).to_f64(),
        first_point: cp.first_point.to_f64(),
        phase: cp.phase,
        l_j: cp.phase - selection,
        selection,
        hessian: cp.hessian,
        frame: [cp.frame.0.to_f64(), cp.frame.1.to_f64()],
        det,
        signature: ev.iter().map(|&l| if l > 0.0 { 1 } else if l < 0.0 { -1 } else { 0 }).sum(),
        residual: cp.residual,
        asymmetry: cp.asymmetry,
        degenerate: det.abs() < DEGENERATE_DET,
        iterations: cp.iterations,
    }))
}
