use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Mat3, Vec3};
use crate::real::Real;

/// Level function of an implicit body: negative inside, convex as a function.
pub type LevelFn<T> = Arc<dyn Fn(Vec3<T>) -> T + Send + Sync>;

#[derive(Clone)]
pub enum BodyKind<T> {
    Sphere {
        center: Vec3<T>,
        radius: T,
    },
    /// `rotation` maps body-frame coordinates to world coordinates.
    Ellipsoid {
        center: Vec3<T>,
        semi_axes: Vec3<T>,
        rotation: Mat3<T>,
    },
    Implicit {
        center: Vec3<T>,
        bound_radius: T,
        level: LevelFn<T>,
    },
}

impl<T: fmt::Debug> fmt::Debug for BodyKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyKind::Sphere { center, radius } => f
                .debug_struct("Sphere")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            BodyKind::Ellipsoid {
                center,
                semi_axes,
                rotation,
            } => f
                .debug_struct("Ellipsoid")
                .field("center", center)
                .field("semi_axes", semi_axes)
                .field("rotation", rotation)
                .finish(),
            BodyKind::Implicit {
                center,
                bound_radius,
                ..
            } => f
                .debug_struct("Implicit")
                .field("center", center)
                .field("bound_radius", bound_radius)
                .finish_non_exhaustive(),
        }
    }
}

/// Boundary point with its outward normal, a tangent frame and the shape
/// operator expressed in that frame.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint<T> {
    pub point: Vec3<T>,
    pub normal: Vec3<T>,
    pub t1: Vec3<T>,
    pub t2: Vec3<T>,
    pub shape: Mat2<T>,
}

#[derive(Clone, Copy, Debug)]
pub struct Hit<T> {
    pub surface: SurfacePoint<T>,
    pub length: T,
    /// `-dir·n`, positive for an incoming ray.
    pub cosine: T,
}

impl<T: Real> Hit<T> {
    pub fn point(&self) -> Vec3<T> {
        self.surface.point
    }

    pub fn normal(&self) -> Vec3<T> {
        self.surface.normal
    }
}

#[derive(Clone, Copy, Debug)]
pub enum RayHit<T> {
    Hit(Hit<T>),
    /// Grazing contact; not a reflection.
    Tangential(Hit<T>),
}

impl<T: Real> RayHit<T> {
    pub fn hit(&self) -> &Hit<T> {
        match self {
            RayHit::Hit(h) | RayHit::Tangential(h) => h,
        }
    }

    pub fn length(&self) -> T {
        self.hit().length
    }
}

#[derive(Clone, Debug)]
pub struct ConvexBody<T> {
    pub kind: BodyKind<T>,
}

impl<T: Real> ConvexBody<T> {
    pub fn sphere(center: Vec3<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) {
            return Err(Error::InvalidInput(format!("sphere radius {radius} must be positive")));
        }
        Ok(Self {
            kind: BodyKind::Sphere { center, radius },
        })
    }

    pub fn ellipsoid(center: Vec3<T>, semi_axes: Vec3<T>, rotation: Mat3<T>) -> Result<Self> {
        if !(semi_axes.x > T::zero() && semi_axes.y > T::zero() && semi_axes.z > T::zero()) {
            return Err(Error::InvalidInput("ellipsoid semi-axes must be positive".into()));
        }
        let orth = rotation.mul_mat(&rotation.transpose());
        let id = Mat3::identity();
        for i in 0..3 {
            if (orth[i] - id[i]).max_abs() > T::tol(1e-10) {
                return Err(Error::InvalidInput("ellipsoid orientation is not a rotation".into()));
            }
        }
        Ok(Self {
            kind: BodyKind::Ellipsoid {
                center,
                semi_axes,
                rotation,
            },
        })
    }

    /// `level` must be a convex function, negative exactly inside the body,
    /// and the body must lie in the ball of radius `bound_radius` about `center`.
    pub fn implicit(center: Vec3<T>, bound_radius: T, level: LevelFn<T>) -> Result<Self> {
        if !(level(center) < T::zero()) {
            return Err(Error::InvalidInput("implicit body center must be interior".into()));
        }
        Ok(Self {
            kind: BodyKind::Implicit {
                center,
                bound_radius,
                level,
            },
        })
    }

    /// Smooth strictly convex "rounded ellipsoid":
    /// `s + beta s^2 - (1 + beta)` with `s = sum (y_i/a_i)^2`.
    pub fn quartic(center: Vec3<T>, semi_axes: Vec3<T>, beta: T) -> Result<Self> {
        if !(beta >= T::zero()) {
            return Err(Error::InvalidInput("quartic beta must be nonnegative".into()));
        }
        let inv = Vec3::new(T::one() / semi_axes.x, T::one() / semi_axes.y, T::one() / semi_axes.z);
        let level: LevelFn<T> = Arc::new(move |p: Vec3<T>| {
            let y = (p - center).mul_elem(inv);
            let s = y.norm_sq();
            s + beta * s * s - (T::one() + beta)
        });
        Self::implicit(center, semi_axes.max_abs() * T::lit(1.01), level)
    }

    pub fn center(&self) -> Vec3<T> {
        match &self.kind {
            BodyKind::Sphere { center, .. }
            | BodyKind::Ellipsoid { center, .. }
            | BodyKind::Implicit { center, .. } => *center,
        }
    }

    /// Radius of a ball about `center()` containing the body.
    pub fn bound_radius(&self) -> T {
        match &self.kind {
            BodyKind::Sphere { radius, .. } => *radius,
            BodyKind::Ellipsoid { semi_axes, .. } => semi_axes.max_abs(),
            BodyKind::Implicit { bound_radius, .. } => *bound_radius,
        }
    }

    /// Negative inside, zero on the boundary. Scaled to be comparable with a
    /// length near the boundary for spheres and ellipsoids.
    pub fn level(&self, p: Vec3<T>) -> T {
        match &self.kind {
            BodyKind::Sphere { center, radius } => (p - *center).norm() - *radius,
            BodyKind::Ellipsoid {
                center,
                semi_axes,
                rotation,
            } => {
                let y = rotation.transpose().mul_vec(p - *center);
                let s = Vec3::new(y.x / semi_axes.x, y.y / semi_axes.y, y.z / semi_axes.z).norm();
                (s - T::one()) * semi_axes.max_abs()
            }
            BodyKind::Implicit { level, .. } => level(p),
        }
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        self.level(p) < T::zero()
    }

    fn fd_step(&self) -> T {
        T::epsilon().powf(T::lit(0.2)) * self.bound_radius()
    }

    // Fourth-order central differences.
    fn implicit_gradient(level: &LevelFn<T>, p: Vec3<T>, h: T) -> Vec3<T> {
        let c8 = T::lit(8.0);
        let denom = T::lit(12.0) * h;
        let d = |e: Vec3<T>| {
            let f = |k: T| level(p + e * (h * k));
            (c8 * (f(T::one()) - f(-T::one())) - (f(T::lit(2.0)) - f(T::lit(-2.0)))) / denom
        };
        Vec3::new(d(Vec3::unit_x()), d(Vec3::unit_y()), d(Vec3::unit_z()))
    }

    /// Outward unit normal field, defined off the boundary as well.
    pub fn normal(&self, p: Vec3<T>) -> Vec3<T> {
        match &self.kind {
            BodyKind::Sphere { center, .. } => (p - *center).normalize(),
            BodyKind::Ellipsoid {
                center,
                semi_axes,
                rotation,
            } => {
                let y = rotation.transpose().mul_vec(p - *center);
                let g = Vec3::new(
                    y.x / (semi_axes.x * semi_axes.x),
                    y.y / (semi_axes.y * semi_axes.y),
                    y.z / (semi_axes.z * semi_axes.z),
                );
                rotation.mul_vec(g).normalize()
            }
            BodyKind::Implicit { level, .. } => {
                Self::implicit_gradient(level, p, self.fd_step()).normalize()
            }
        }
    }

    /// Normal, tangent frame and shape operator at a boundary point.
    pub fn surface_at(&self, p: Vec3<T>) -> SurfacePoint<T> {
        let n = self.normal(p);
        let (t1, t2) = n.orthonormal_pair();
        let shape = match &self.kind {
            BodyKind::Sphere { radius, .. } => Mat2::scalar(T::one() / *radius),
            BodyKind::Ellipsoid {
                center,
                semi_axes,
                rotation,
            } => {
                let rt = rotation.transpose();
                let y = rt.mul_vec(p - *center);
                let hdiag = Vec3::new(
                    T::one() / (semi_axes.x * semi_axes.x),
                    T::one() / (semi_axes.y * semi_axes.y),
                    T::one() / (semi_axes.z * semi_axes.z),
                );
                let gnorm = y.mul_elem(hdiag).norm();
                let (b1, b2) = (rt.mul_vec(t1), rt.mul_vec(t2));
                let q = |u: Vec3<T>, v: Vec3<T>| u.mul_elem(hdiag).dot(v) / gnorm;
                let off = q(b1, b2);
                Mat2::new(q(b1, b1), off, off, q(b2, b2))
            }
            BodyKind::Implicit { .. } => {
                let h = self.fd_step();
                let two_h = h + h;
                let dn = |t: Vec3<T>| (self.normal(p + t * h) - self.normal(p - t * h)) / two_h;
                let (d1, d2) = (dn(t1), dn(t2));
                Mat2::new(t1.dot(d1), t1.dot(d2), t2.dot(d1), t2.dot(d2)).symmetrize()
            }
        };
        SurfacePoint {
            point: p,
            normal: n,
            t1,
            t2,
            shape,
        }
    }

    /// First entry of the ray `origin + s dir`, `s > 0`, into the body.
    pub fn ray_intersect(&self, origin: Vec3<T>, dir: Vec3<T>, tangency: T) -> Option<RayHit<T>> {
        let s = match &self.kind {
            BodyKind::Sphere { center, radius } => {
                quadric_entry(origin - *center, dir, Vec3::new(*radius, *radius, *radius))
            }
            BodyKind::Ellipsoid {
                center,
                semi_axes,
                rotation,
            } => {
                let rt = rotation.transpose();
                quadric_entry(rt.mul_vec(origin - *center), rt.mul_vec(dir), *semi_axes)
            }
            BodyKind::Implicit {
                center,
                bound_radius,
                level,
            } => implicit_entry(level, *center, *bound_radius, origin, dir),
        }?;
        let point = origin + dir * s;
        let surface = self.surface_at(point);
        let cosine = -dir.dot(surface.normal);
        let hit = Hit {
            surface,
            length: s,
            cosine,
        };
        if cosine < tangency {
            Some(RayHit::Tangential(hit))
        } else {
            Some(RayHit::Hit(hit))
        }
    }

    /// Boundary point met by the ray from the center in direction `omega`.
    pub fn radial_point(&self, omega: Vec3<T>) -> Vec3<T> {
        let w = omega.normalize();
        match &self.kind {
            BodyKind::Sphere { center, radius } => *center + w * *radius,
            BodyKind::Ellipsoid {
                center,
                semi_axes,
                rotation,
            } => {
                let v = rotation.transpose().mul_vec(w);
                let s = Vec3::new(v.x / semi_axes.x, v.y / semi_axes.y, v.z / semi_axes.z).norm();
                *center + w / s
            }
            BodyKind::Implicit {
                center,
                bound_radius,
                level,
            } => {
                let f = |s: T| level(*center + w * s);
                let r = bracketed_root(&f, T::zero(), *bound_radius * T::lit(1.5), T::tol(1e-15));
                *center + w * r
            }
        }
    }

    /// Boundary point whose outward normal is the unit vector `u`.
    pub fn support_point(&self, u: Vec3<T>) -> Result<Vec3<T>> {
        let u = u.normalize();
        match &self.kind {
            BodyKind::Sphere { center, radius } => Ok(*center + u * *radius),
            BodyKind::Ellipsoid {
                center,
                semi_axes,
                rotation,
            } => {
                let nu = rotation.transpose().mul_vec(u);
                let a2 = semi_axes.mul_elem(*semi_axes);
                let y = nu.mul_elem(a2) / nu.mul_elem(a2).dot(nu).sqrt();
                Ok(*center + rotation.mul_vec(y))
            }
            BodyKind::Implicit { .. } => self.implicit_support(u),
        }
    }

    // Newton on the tangential misfit of the normal, over the radial chart.
    fn implicit_support(&self, u: Vec3<T>) -> Result<Vec3<T>> {
        let (e1, e2) = u.orthonormal_pair();
        let mut omega = u;
        let residual = |w: Vec3<T>| {
            let n = self.normal(self.radial_point(w));
            [n.dot(e1), n.dot(e2)]
        };
        let h = T::epsilon().sqrt() * T::lit(4.0);
        let norm = |r: [T; 2]| r[0].abs().max(r[1].abs());
        let mut res = residual(omega);
        let mut iterations = 0;
        while iterations < 60 && norm(res) > T::tol(1e-14) {
            iterations += 1;
            let col = |e: Vec3<T>| {
                let p = residual((omega + e * h).normalize());
                let m = residual((omega - e * h).normalize());
                [(p[0] - m[0]) / (h + h), (p[1] - m[1]) / (h + h)]
            };
            let (c1, c2) = (col(e1), col(e2));
            let jac = Mat2::new(c1[0], c2[0], c1[1], c2[1]);
            let inv = jac.inverse().ok_or_else(|| Error::Degenerate("support Jacobian".into()))?;
            let step = inv.apply(res);
            let cand = (omega - e1 * step[0] - e2 * step[1]).normalize();
            let cand_res = residual(cand);
            // Stagnation at the finite-difference noise floor of the normal.
            if norm(cand_res) >= norm(res) {
                break;
            }
            omega = cand;
            res = cand_res;
        }
        if norm(res) < T::tol(1e-10) {
            return Ok(self.radial_point(omega));
        }
        Err(Error::NoConvergence {
            what: "implicit support point",
            iterations,
            residual: norm(res).to_f64_lossy(),
        })
    }

    /// Roughly uniform boundary samples: radial projection of a Fibonacci sphere.
    pub fn boundary_samples(&self, count: usize) -> Vec<Vec3<T>> {
        fibonacci_sphere::<T>(count)
            .into_iter()
            .map(|w| self.radial_point(w))
            .collect()
    }
}

/// Entry parameter of a ray into an axis-aligned ellipsoid centred at the origin.
fn quadric_entry<T: Real>(o: Vec3<T>, d: Vec3<T>, axes: Vec3<T>) -> Option<T> {
    let inv = Vec3::new(T::one() / axes.x, T::one() / axes.y, T::one() / axes.z);
    let (os, ds) = (o.mul_elem(inv), d.mul_elem(inv));
    let a = ds.norm_sq();
    let b = os.dot(ds);
    let c = os.norm_sq() - T::one();
    let disc = b * b - a * c;
    if disc < T::zero() || b >= T::zero() {
        return None;
    }
    // Stable form of the smaller root.
    let q = -b + disc.sqrt();
    let s = c / q;
    if s > T::zero() {
        Some(s)
    } else {
        None
    }
}

fn implicit_entry<T: Real>(
    level: &LevelFn<T>,
    center: Vec3<T>,
    bound: T,
    origin: Vec3<T>,
    dir: Vec3<T>,
) -> Option<T> {
    // Only the chord through the bounding ball can meet the body.
    let oc = origin - center;
    let b = oc.dot(dir);
    let disc = b * b - (oc.norm_sq() - bound * bound);
    if disc <= T::zero() {
        return None;
    }
    let s_far = -b + disc.sqrt();
    if s_far <= T::zero() {
        return None;
    }
    let s_near = (-b - disc.sqrt()).max(T::zero());
    let f = |s: T| level(origin + dir * s);
    if f(s_near) <= T::zero() {
        return None;
    }
    // F is convex along the line: golden-section search for its minimum.
    let phi = T::lit(0.618_033_988_749_894_8);
    let (mut lo, mut hi) = (s_near, s_far);
    let mut x1 = hi - (hi - lo) * phi;
    let mut x2 = lo + (hi - lo) * phi;
    let (mut f1, mut f2) = (f(x1), f(x2));
    let tol = T::tol(1e-13) * bound;
    while hi - lo > tol {
        if f1 <= T::zero() || f2 <= T::zero() {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - (hi - lo) * phi;
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + (hi - lo) * phi;
            f2 = f(x2);
        }
    }
    let s_in = if f1 <= T::zero() {
        x1
    } else if f2 <= T::zero() {
        x2
    } else {
        return None;
    };
    Some(bracketed_root(&f, s_near, s_in, T::tol(1e-12) * bound.max(T::one())))
}

/// Root of `f` in `[lo, hi]` given a sign change: secant steps guarded by bisection.
fn bracketed_root<T: Real>(f: &dyn Fn(T) -> T, lo: T, hi: T, tol: T) -> T {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    let half = T::lit(0.5);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let mut m = a - fa * (b - a) / (fb - fa);
        let width = b - a;
        if !(m > a + width * T::lit(0.01) && m < b - width * T::lit(0.01)) {
            m = (a + b) * half;
        }
        let fm = f(m);
        if fm == T::zero() {
            return m;
        }
        if (fm > T::zero()) == (fa > T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

/// Deterministic, nearly uniform unit vectors.
pub fn fibonacci_sphere<T: Real>(count: usize) -> Vec<Vec3<T>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            Vec3::from_f64([r * a.cos(), r * a.sin(), z])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_sphere() -> ConvexBody<f64> {
        ConvexBody::sphere(Vec3::zero(), 1.0).unwrap()
    }

    #[test]
    fn sphere_hit_from_outside() {
        let hit = unit_sphere()
            .ray_intersect(Vec3::new(3.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0), 1e-8)
            .unwrap();
        let RayHit::Hit(h) = hit else { panic!("expected a regular hit") };
        assert!((h.point() - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((h.length - 2.0).abs() < 1e-15);
        assert!((h.normal() - Vec3::unit_x()).norm() < 1e-15);
        let e = h.surface.shape.sym_eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_ray_pointing_away_misses() {
        assert!(unit_sphere()
            .ray_intersect(Vec3::new(3.0, 0.0, 0.0), Vec3::unit_x(), 1e-8)
            .is_none());
    }

    #[test]
    fn grazing_ray_is_tangential() {
        let hit = unit_sphere()
            .ray_intersect(Vec3::new(-3.0, 1.0 - 1e-17, 0.0), Vec3::unit_x(), 1e-8)
            .unwrap();
        assert!(matches!(hit, RayHit::Tangential(_)));
    }

    #[test]
    fn ellipsoid_axis_hit_matches_quadratic_root() {
        let body = ConvexBody::<f64>::ellipsoid(Vec3::zero(), Vec3::new(2.0, 1.0, 1.0), Mat3::identity())
            .unwrap();
        let h = *body
            .ray_intersect(Vec3::new(5.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0), 1e-8)
            .unwrap()
            .hit();
        assert!((h.point() - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-14);
        assert!((h.length - 3.0).abs() < 1e-14);
        assert!((h.normal() - Vec3::unit_x()).norm() < 1e-14);
        // Curvature at the vertex of x^2/4 + y^2 = 1 is a/b^2 = 2.
        let e = h.surface.shape.sym_eigenvalues();
        assert!((e[0] - 2.0).abs() < 1e-12 && (e[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn off_axis_ellipsoid_hit_solves_the_quadric() {
        let rot = Mat3::rotation_zyx(0.4, 0.2, -0.3);
        let c = Vec3::new(0.5, -1.0, 2.0);
        let body = ConvexBody::<f64>::ellipsoid(c, Vec3::new(1.5, 0.7, 1.1), rot).unwrap();
        let origin = Vec3::new(6.0, 1.0, 0.0);
        let dir = (c - origin + Vec3::new(0.0, 0.3, 0.1)).normalize();
        let h = *body.ray_intersect(origin, dir, 1e-8).unwrap().hit();
        assert!(body.level(h.point()).abs() < 1e-12);
        assert!(body.level(origin + dir * (h.length * 0.999)) > 0.0);
    }

    #[test]
    fn implicit_sphere_matches_analytic_sphere() {
        let level: LevelFn<f64> = Arc::new(|p: Vec3<f64>| p.norm_sq() - 1.0);
        let body = ConvexBody::implicit(Vec3::zero(), 1.1, level).unwrap();
        let o = Vec3::new(3.0, 0.2, -0.1);
        let d = Vec3::new(-1.0, 0.05, 0.02).normalize();
        let a = *body.ray_intersect(o, d, 1e-8).unwrap().hit();
        let b = *unit_sphere().ray_intersect(o, d, 1e-8).unwrap().hit();
        assert!((a.length - b.length).abs() < 1e-11);
        assert!((a.normal() - b.normal()).norm() < 1e-8);
        let e = a.surface.shape.sym_eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-5 && (e[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn support_points() {
        let body = ConvexBody::<f64>::ellipsoid(Vec3::zero(), Vec3::new(1.0, 2.0, 2.0), Mat3::identity())
            .unwrap();
        let u = Vec3::new(0.3, 0.5, -0.2).normalize();
        let p = body.support_point(u).unwrap();
        assert!(body.level(p).abs() < 1e-13);
        assert!((body.normal(p) - u).norm() < 1e-13);

        let q = ConvexBody::<f64>::quartic(Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 1.3, 0.8), 0.5)
            .unwrap();
        let p = q.support_point(u).unwrap();
        assert!(q.level(p).abs() < 1e-10);
        assert!((q.normal(p) - u).norm() < 1e-9);
    }

    #[test]
    fn f32_sphere_hit() {
        let s = ConvexBody::<f32>::sphere(Vec3::zero(), 1.0).unwrap();
        let h = *s
            .ray_intersect(Vec3::new(3.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0), 1e-4)
            .unwrap()
            .hit();
        assert!((h.length - 2.0).abs() < 1e-6);
    }
}
