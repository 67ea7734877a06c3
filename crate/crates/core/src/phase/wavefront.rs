use serde::{Deserialize, Serialize};

use crate::billiard::{reflect_direction, Story};
use crate::error::{Error, Result};
use crate::geometry::Hit;
use crate::linalg::{Mat2, Vec3};
use crate::real::Real;

/// `+` uses the plane wave moving along `xi`, `-` the one moving along `-xi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn apply<T: Real>(self, v: Vec3<T>) -> Vec3<T> {
        match self {
            Sign::Plus => v,
            Sign::Minus => -v,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Local description of a wavefront at a point of a ray.
#[derive(Clone, Debug, PartialEq)]
pub struct WavefrontSample<T> {
    pub x: Vec3<T>,
    pub phase: T,
    /// Unit gradient of the phase (the ray direction).
    pub grad: Vec3<T>,
    /// Orthonormal frame of the plane orthogonal to `grad`.
    pub frame: [Vec3<T>; 2],
    /// Second fundamental form of the level surface w.r.t. `-grad`, in `frame`.
    /// Equals the Hessian of the phase restricted to the frame plane.
    pub curvature: Mat2<T>,
    pub story: Story,
    pub sign: Sign,
    /// Path length from the first reflection point to `x`.
    pub l_j: T,
    /// Accumulated ratio of ray-tube cross sections (start over current),
    /// i.e. the product of Gaussian-curvature ratios along the legs.
    pub pencil: T,
}

impl<T: Real> WavefrontSample<T> {
    /// A plane wave through `x` moving along `dir`.
    pub fn plane(x: Vec3<T>, dir: Vec3<T>, phase: T, sign: Sign) -> Self {
        let grad = dir.normalize();
        let (f1, f2) = grad.orthonormal_pair();
        Self {
            x,
            phase,
            grad,
            frame: [f1, f2],
            curvature: Mat2::zero(),
            story: Story::empty(),
            sign,
            l_j: T::zero(),
            pencil: T::one(),
        }
    }

    /// Spherical wave emitted at `source`, observed at `x`.
    pub fn point_source(source: Vec3<T>, x: Vec3<T>, sign: Sign) -> Self {
        let r = (x - source).norm();
        let mut s = Self::plane(x, x - source, r, sign);
        s.curvature = Mat2::scalar(T::one() / r);
        s
    }

    pub fn principal_curvatures(&self) -> [T; 2] {
        self.curvature.sym_eigenvalues()
    }

    pub fn gaussian_curvature(&self) -> T {
        self.curvature.det()
    }
}

/// Free flight by `tau`: `Q' = Q (I + tau Q)^{-1}`.
pub fn propagate_wavefront<T: Real>(sample: &WavefrontSample<T>, tau: T) -> Result<WavefrontSample<T>> {
    if tau < T::zero() {
        return Err(Error::InvalidInput("propagation length must be nonnegative".into()));
    }
    let growth = Mat2::identity().add(&sample.curvature.scale(tau));
    let det = growth.det();
    let [e0, e1] = growth.sym_eigenvalues();
    if !(e0.min(e1) > T::zero()) || !(det > T::zero()) {
        return Err(Error::Focal(e0.min(e1).to_f64_lossy()));
    }
    let inv = growth.inverse().ok_or(Error::Focal(0.0))?;
    let mut out = sample.clone();
    out.x = sample.x + sample.grad * tau;
    out.phase = sample.phase + tau;
    out.curvature = sample.curvature.mul(&inv).symmetrize();
    if !out.story.is_empty() {
        out.l_j = sample.l_j + tau;
    }
    out.pencil = sample.pencil / det;
    Ok(out)
}

fn householder<T: Real>(v: Vec3<T>, n: Vec3<T>) -> Vec3<T> {
    v - n * (v.dot(n) * T::lit(2.0))
}

/// Reflection on a convex surface. The sample is first carried to the hit point.
///
/// Matching the second-order Taylor expansions of the incident and reflected
/// phases on the surface gives
/// `M'^T Q+ M' = M^T Q- M + 2 cos(theta) S`, where `M`, `M'` map the surface
/// tangent frame into the incident and reflected wavefront frames.
pub fn reflect_wavefront<T: Real>(
    sample: &WavefrontSample<T>,
    hit: &Hit<T>,
    body: u8,
    tangency: T,
) -> Result<WavefrontSample<T>> {
    let at_hit = if (hit.point() - sample.x).norm() > T::tol(1e-14) * (T::one() + hit.length) {
        propagate_wavefront(sample, hit.length)?
    } else {
        sample.clone()
    };
    let n = hit.normal();
    let d = at_hit.grad;
    let cos = -d.dot(n);
    if cos <= T::zero() {
        return Err(Error::NotIncoming(d.dot(n).to_f64_lossy()));
    }
    if cos < tangency {
        return Err(Error::Tangential {
            point: hit.point().to_f64(),
            cosine: cos.to_f64_lossy(),
        });
    }
    let d_out = reflect_direction(d, n)?;
    let [f1, f2] = at_hit.frame;
    let (g1, g2) = (householder(f1, n), householder(f2, n));
    let (t1, t2) = (hit.surface.t1, hit.surface.t2);
    let m_in = Mat2::new(f1.dot(t1), f1.dot(t2), f2.dot(t1), f2.dot(t2));
    let m_out = Mat2::new(g1.dot(t1), g1.dot(t2), g2.dot(t1), g2.dot(t2));
    let tangential = m_in
        .transpose()
        .mul(&at_hit.curvature)
        .mul(&m_in)
        .add(&hit.surface.shape.scale(cos + cos));
    let m_out_inv = m_out
        .inverse()
        .ok_or_else(|| Error::Degenerate("reflected frame is singular".into()))?;
    let q = m_out_inv.transpose().mul(&tangential).mul(&m_out_inv).symmetrize();
    let mut story = at_hit.story.clone();
    story.push(body)?;
    Ok(WavefrontSample {
        x: hit.point(),
        phase: at_hit.phase,
        grad: d_out,
        frame: [g1, g2],
        curvature: q,
        story,
        sign: at_hit.sign,
        l_j: at_hit.l_j,
        pencil: at_hit.pencil,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexBody, RayHit};

    #[test]
    fn plane_stays_plane_and_sphere_stays_sphere() {
        let p = WavefrontSample::<f64>::plane(Vec3::zero(), Vec3::unit_x(), 0.0, Sign::Plus);
        let q = propagate_wavefront(&p, 3.0).unwrap();
        assert_eq!(q.curvature, Mat2::zero());
        assert!((q.x - Vec3::new(3.0, 0.0, 0.0)).norm() < 1e-15);

        let s = WavefrontSample::<f64>::point_source(Vec3::zero(), Vec3::new(2.0, 0.0, 0.0), Sign::Plus);
        let q = propagate_wavefront(&s, 1.5).unwrap();
        let k = q.principal_curvatures();
        assert!((k[0] - 1.0 / 3.5).abs() < 1e-15 && (k[1] - 1.0 / 3.5).abs() < 1e-15);
        // Area ratio (2 / 3.5)^2.
        assert!((q.pencil - (2.0f64 / 3.5).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn normal_incidence_on_unit_sphere_focuses_at_half() {
        let body = ConvexBody::<f64>::sphere(Vec3::zero(), 1.0).unwrap();
        let w = WavefrontSample::plane(Vec3::new(3.0, 0.0, 0.0), -Vec3::unit_x(), 0.0, Sign::Plus);
        let RayHit::Hit(h) = body.ray_intersect(w.x, w.grad, 1e-8).unwrap() else { panic!() };
        let r = reflect_wavefront(&w, &h, 1, 1e-8).unwrap();
        let k = r.principal_curvatures();
        assert!((k[0] - 2.0).abs() < 1e-14 && (k[1] - 2.0).abs() < 1e-14);
        assert!((r.phase - 2.0).abs() < 1e-15);
        assert!((r.grad - Vec3::unit_x()).norm() < 1e-15);
    }
}
