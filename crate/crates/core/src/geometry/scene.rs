use serde::{Deserialize, Serialize};

use super::body::{ConvexBody, RayHit};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec3};
use crate::real::Real;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    /// `|dir·n|` below this is a grazing contact.
    pub tangency: f64,
    /// Required perpendicularity residual of the trapped ray.
    pub perpendicularity: f64,
    /// Convergence tolerance of the phase Newton solve (dimensionless).
    pub newton: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tangency: 1e-8,
            perpendicularity: 1e-10,
            newton: 1e-13,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrappedRay<T> {
    pub a1: Vec3<T>,
    pub a2: Vec3<T>,
    pub gap: T,
    /// Largest deviation of the endpoint normals from `±e`.
    pub residual: T,
}

/// Finite cylinder about the trapped ray, `{ nu(p) <= 1 }`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cylinder<T> {
    pub a1: Vec3<T>,
    pub axis: Vec3<T>,
    pub gap: T,
    pub radius: T,
    /// Extra axial length beyond each endpoint of the trapped ray.
    pub margin: T,
}

impl<T: Real> Cylinder<T> {
    /// Normalized gauge of the cylinder; convex in `p`, equal to 1 on its surface.
    pub fn nu(&self, p: Vec3<T>) -> T {
        let d = p - self.a1;
        let s = d.dot(self.axis);
        let perp = d.reject(self.axis).norm();
        let half = self.gap * T::lit(0.5);
        (perp / self.radius).max((s - half).abs() / (half + self.margin))
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        self.nu(p) <= T::one()
    }

    /// Point at axial coordinate `s` (from `a1`) and transverse offsets.
    pub fn point(&self, s: T, q1: T, q2: T) -> Vec3<T> {
        let (u1, u2) = self.axis.orthonormal_pair();
        self.a1 + self.axis * s + u1 * q1 + u2 * q2
    }
}

#[derive(Clone, Debug)]
pub struct Scene<T> {
    pub body1: ConvexBody<T>,
    pub body2: ConvexBody<T>,
    pub axis_e: Vec3<T>,
    pub trapped: TrappedRay<T>,
    pub cylinder_radius: T,
    /// Lower bound on the incidence cosine for admissible phases.
    pub delta1: T,
    pub tolerances: Tolerances,
}

impl<T: Real> Scene<T> {
    pub fn new(body1: ConvexBody<T>, body2: ConvexBody<T>, cylinder_radius: T) -> Result<Self> {
        Self::with_tolerances(body1, body2, cylinder_radius, T::lit(1e-2), Tolerances::default())
    }

    pub fn with_tolerances(
        body1: ConvexBody<T>,
        body2: ConvexBody<T>,
        cylinder_radius: T,
        delta1: T,
        tolerances: Tolerances,
    ) -> Result<Self> {
        if !(cylinder_radius > T::zero()) {
            return Err(Error::InvalidInput("cylinder radius must be positive".into()));
        }
        let trapped = trapped_ray(&body1, &body2)?;
        if trapped.residual > T::tol(tolerances.perpendicularity) {
            return Err(Error::NoConvergence {
                what: "trapped ray",
                iterations: 0,
                residual: trapped.residual.to_f64_lossy(),
            });
        }
        let axis_e = (trapped.a2 - trapped.a1).normalize();
        Ok(Self {
            body1,
            body2,
            axis_e,
            trapped,
            cylinder_radius,
            delta1,
            tolerances,
        })
    }

    /// Unit spheres centred at the origin and at `(distance, 0, 0)`.
    pub fn two_spheres(distance: T, cylinder_radius: T) -> Result<Self> {
        let b1 = ConvexBody::sphere(Vec3::zero(), T::one())?;
        let b2 = ConvexBody::sphere(Vec3::new(distance, T::zero(), T::zero()), T::one())?;
        Self::new(b1, b2, cylinder_radius)
    }

    /// Unit spheres at distance 4 (gap 2), cylinder radius 0.5.
    pub fn standard() -> Self {
        Self::two_spheres(T::lit(4.0), T::lit(0.5)).expect("standard scene is valid")
    }

    pub fn body(&self, j: u8) -> &ConvexBody<T> {
        if j == 1 {
            &self.body1
        } else {
            &self.body2
        }
    }

    pub fn gap(&self) -> T {
        self.trapped.gap
    }

    pub fn midpoint(&self) -> Vec3<T> {
        (self.trapped.a1 + self.trapped.a2) * T::lit(0.5)
    }

    pub fn diameter(&self) -> T {
        let c = (self.body1.center() - self.body2.center()).norm();
        c + self.body1.bound_radius() + self.body2.bound_radius()
    }

    /// Radius of the escape ball about the midpoint.
    pub fn escape_radius(&self) -> T {
        self.diameter() * T::lit(2.0)
    }

    pub fn tangency(&self) -> T {
        T::tol(self.tolerances.tangency)
    }

    /// The neighbourhood U of the trapped ray (no axial margin).
    pub fn u_infinity(&self) -> Cylinder<T> {
        self.cylinder(T::zero())
    }

    /// The default trapping region D: 10% axial margin.
    pub fn default_region(&self) -> Cylinder<T> {
        self.cylinder(self.gap() * T::lit(0.1))
    }

    pub fn cylinder(&self, margin: T) -> Cylinder<T> {
        Cylinder {
            a1: self.trapped.a1,
            axis: self.axis_e,
            gap: self.gap(),
            radius: self.cylinder_radius,
            margin,
        }
    }

    pub fn outside_bodies(&self, p: Vec3<T>) -> bool {
        !self.body1.contains(p) && !self.body2.contains(p)
    }

    /// Nearest obstacle along a ray, with its index.
    pub fn first_hit(&self, origin: Vec3<T>, dir: Vec3<T>) -> Option<(u8, RayHit<T>)> {
        let tol = self.tangency();
        let h1 = self.body1.ray_intersect(origin, dir, tol).map(|h| (1u8, h));
        let h2 = self.body2.ray_intersect(origin, dir, tol).map(|h| (2u8, h));
        match (h1, h2) {
            (Some(a), Some(b)) => Some(if a.1.length() <= b.1.length() { a } else { b }),
            (a, b) => a.or(b),
        }
    }

    /// Smallest shape-operator eigenvalue over boundary samples of both bodies.
    pub fn convexity_margins(&self, samples: usize) -> [T; 2] {
        let margin = |b: &ConvexBody<T>| {
            b.boundary_samples(samples)
                .into_iter()
                .map(|p| b.surface_at(p).shape.sym_eigenvalues()[0])
                .fold(T::infinity(), T::min)
        };
        [margin(&self.body1), margin(&self.body2)]
    }
}

/// Common perpendicular of two disjoint strictly convex bodies.
///
/// Alternating support points `a1 = s1(u)`, `a2 = s2(-u)`, `u <- unit(a2 - a1)`,
/// then Newton on the two tangential components of `unit(a2 - a1) - u`.
pub fn trapped_ray<T: Real>(b1: &ConvexBody<T>, b2: &ConvexBody<T>) -> Result<TrappedRay<T>> {
    let pair = |u: Vec3<T>| -> Result<(Vec3<T>, Vec3<T>)> {
        Ok((b1.support_point(u)?, b2.support_point(-u)?))
    };
    let misfit = |u: Vec3<T>| -> Result<Vec3<T>> {
        let (a1, a2) = pair(u)?;
        let d = a2 - a1;
        if d.dot(u) <= T::zero() {
            return Err(Error::InvalidInput("bodies are not disjoint".into()));
        }
        Ok(d.normalize() - u)
    };

    let mut u = (b2.center() - b1.center()).normalize();
    if !u.is_finite() {
        return Err(Error::InvalidInput("bodies share a center".into()));
    }
    for _ in 0..200 {
        let (a1, a2) = pair(u)?;
        let next = (a2 - a1).normalize();
        let change = (next - u).norm();
        u = next;
        if change < T::tol(1e-6) {
            break;
        }
    }

    let h = T::epsilon().sqrt() * T::lit(4.0);
    let mut res = misfit(u)?.norm();
    let max_iter = 50;
    let mut iter = 0;
    while res > T::tol(1e-15) && iter < max_iter {
        iter += 1;
        let (e1, e2) = u.orthonormal_pair();
        let f0 = misfit(u)?;
        let comp = |v: Vec3<T>| [v.dot(e1), v.dot(e2)];
        let col = |e: Vec3<T>| -> Result<[T; 2]> {
            let p = comp(misfit((u + e * h).normalize())?);
            let m = comp(misfit((u - e * h).normalize())?);
            Ok([(p[0] - m[0]) / (h + h), (p[1] - m[1]) / (h + h)])
        };
        let (c1, c2) = (col(e1)?, col(e2)?);
        let jac = Mat2::new(c1[0], c2[0], c1[1], c2[1]);
        let Some(inv) = jac.inverse() else { break };
        let step = inv.apply(comp(f0));
        let cand = (u - e1 * step[0] - e2 * step[1]).normalize();
        let cand_res = misfit(cand)?.norm();
        if cand_res >= res {
            break;
        }
        u = cand;
        res = cand_res;
    }

    let (a1, a2) = pair(u)?;
    let e = (a2 - a1).normalize();
    let residual = (b1.normal(a1) - e).norm().max((b2.normal(a2) + e).norm());
    if !residual.is_finite() || residual > T::tol(1e-8) {
        return Err(Error::NoConvergence {
            what: "trapped ray",
            iterations: iter,
            residual: residual.to_f64_lossy(),
        });
    }
    Ok(TrappedRay {
        a1,
        a2,
        gap: (a2 - a1).norm(),
        residual,
    })
}
