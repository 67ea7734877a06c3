use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::flow::reflect_direction;
use crate::error::{Error, Result};
use crate::geometry::{RayHit, Scene};
use crate::linalg::Vec3;
use crate::real::Real;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReturnMapAnalysis {
    pub period: f64,
    /// Row-major linearized return map in `(q1, q2, p1, p2)`.
    pub monodromy: [[f64; 4]; 4],
    /// Eigenvalue moduli, descending.
    pub eigenvalues: [f64; 4],
    /// Largest imaginary part among the eigenvalues (0 for a hyperbolic orbit).
    pub max_imag: f64,
    /// Product of the two eigenvalues of modulus below one.
    pub lambda: f64,
    pub mu_max: f64,
    /// Determinants of the `(q1, p1)` and `(q2, p2)` blocks.
    pub block_dets: [f64; 2],
    pub condition: f64,
    pub fd_step: f64,
}

impl ReturnMapAnalysis {
    /// Transverse expansion rate per unit time, `ln(mu_max) / period`.
    pub fn rate_per_unit_time(&self) -> f64 {
        self.mu_max.ln() / self.period
    }
}

/// Section through the trapped-ray midpoint orthogonal to the axis.
#[derive(Clone, Copy, Debug)]
pub struct Section<T = f64> {
    pub origin: Vec3<T>,
    pub e: Vec3<T>,
    pub u1: Vec3<T>,
    pub u2: Vec3<T>,
}

impl<T: Real> Section<T> {
    pub fn of(scene: &Scene<T>) -> Self {
        let e = scene.axis_e;
        let (u1, u2) = e.orthonormal_pair();
        Self {
            origin: scene.midpoint(),
            e,
            u1,
            u2,
        }
    }

    pub fn state(&self, c: [T; 4]) -> (Vec3<T>, Vec3<T>) {
        let x = self.origin + self.u1 * c[0] + self.u2 * c[1];
        let pe = (T::one() - c[2] * c[2] - c[3] * c[3]).max(T::zero()).sqrt();
        (x, self.u1 * c[2] + self.u2 * c[3] + self.e * pe)
    }

    pub fn coords(&self, x: Vec3<T>, d: Vec3<T>) -> [T; 4] {
        let r = x - self.origin;
        [r.dot(self.u1), r.dot(self.u2), d.dot(self.u1), d.dot(self.u2)]
    }
}

/// One full period: reflect on body 2 then body 1 and return to the section.
pub fn section_return<T: Real>(scene: &Scene<T>, sec: &Section<T>, c: [T; 4]) -> Result<[T; 4]> {
    let (mut x, mut d) = sec.state(c);
    for j in [2u8, 1u8] {
        match scene.body(j).ray_intersect(x, d, scene.tangency()) {
            Some(RayHit::Hit(h)) => {
                x = h.point();
                d = reflect_direction(d, h.normal())?;
            }
            _ => return Err(Error::Degenerate(format!("return orbit missed body {j}"))),
        }
    }
    let s = (sec.origin - x).dot(sec.e) / d.dot(sec.e);
    Ok(sec.coords(x + d * s, d))
}

/// Linearized two-bounce return map by central differences with step `1e-5 × gap`,
/// Richardson-extrapolated from steps `h` and `h/2`.
pub fn return_map(scene: &Scene<f64>) -> Result<ReturnMapAnalysis> {
    return_map_with_step(scene, 1e-5 * scene.gap())
}

pub fn return_map_with_step(scene: &Scene<f64>, step: f64) -> Result<ReturnMapAnalysis> {
    let sec = Section::of(scene);
    let base = section_return(scene, &sec, [0.0; 4])?;
    if base.iter().any(|v| v.abs() > 1e-9) {
        return Err(Error::Inconsistent("trapped ray is not a fixed point of the return map".into()));
    }
    // Central differences at h and h/2, combined by Richardson extrapolation.
    let jac = |h: f64| -> Result<Matrix4<f64>> {
        let mut m = Matrix4::<f64>::zeros();
        for k in 0..4 {
            let mut cp = [0.0; 4];
            let mut cm = [0.0; 4];
            cp[k] = h;
            cm[k] = -h;
            let fp = section_return(scene, &sec, cp)?;
            let fm = section_return(scene, &sec, cm)?;
            m.set_column(k, &Vector4::from_fn(|i, _| (fp[i] - fm[i]) / (2.0 * h)));
        }
        Ok(m)
    };
    let coarse = jac(step)?;
    let fine = jac(step / 2.0)?;
    let m = (fine * 4.0 - coarse) / 3.0;
    let sv = m.singular_values();
    let condition = sv.max() / sv.min();
    if !condition.is_finite() || condition > 1e8 {
        return Err(Error::Degenerate(format!(
            "return-map Jacobian condition {condition:e}; change the step from {step:e}"
        )));
    }
    let eig = m.complex_eigenvalues();
    let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let max_imag = eig.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let lambda = moduli.iter().filter(|&&v| v < 1.0).product::<f64>();
    let block_det = |a: usize, b: usize| m[(a, a)] * m[(b, b)] - m[(a, b)] * m[(b, a)];
    let mut monodromy = [[0.0; 4]; 4];
    for (i, row) in monodromy.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    Ok(ReturnMapAnalysis {
        period: 2.0 * scene.gap(),
        monodromy,
        eigenvalues: [moduli[0], moduli[1], moduli[2], moduli[3]],
        max_imag,
        lambda,
        mu_max: moduli[0],
        block_dets: [block_det(0, 2), block_det(1, 3)],
        condition,
        fd_step: step,
    })
}

/// `lambda` in any precision: central differences at `step / 2^k`,
/// `k < levels`, combined in a Richardson tableau, then the two contracting
/// roots of the palindromic characteristic polynomial
/// `nu^2 - tr(M) nu + (m2 - 2)`, `nu = z + 1/z`, with `m2` the sum of the
/// principal 2x2 minors.
pub fn contracting_product<T: Real>(scene: &Scene<T>, step: T, levels: usize) -> Result<T> {
    let sec = Section::of(scene);
    let jac = |h: T| -> Result<[[T; 4]; 4]> {
        let mut m = [[T::zero(); 4]; 4];
        for k in 0..4 {
            let mut cp = [T::zero(); 4];
            let mut cm = [T::zero(); 4];
            cp[k] = h;
            cm[k] = -h;
            let fp = section_return(scene, &sec, cp)?;
            let fm = section_return(scene, &sec, cm)?;
            for i in 0..4 {
                m[i][k] = (fp[i] - fm[i]) / (h + h);
            }
        }
        Ok(m)
    };
    let mut tableau: Vec<[[T; 4]; 4]> = Vec::with_capacity(levels);
    let mut h = step;
    for _ in 0..levels.max(1) {
        tableau.push(jac(h)?);
        h = h * T::lit(0.5);
    }
    // Neville-style elimination of the h^2, h^4, ... error terms.
    for order in 1..tableau.len() {
        let f = T::lit(4f64.powi(order as i32));
        for k in (order..tableau.len()).rev() {
            let (lo, hi) = (tableau[k - 1], tableau[k]);
            for i in 0..4 {
                for j in 0..4 {
                    tableau[k][i][j] = (hi[i][j] * f - lo[i][j]) / (f - T::one());
                }
            }
        }
    }
    let m = tableau[tableau.len() - 1];
    let trace = m[0][0] + m[1][1] + m[2][2] + m[3][3];
    let mut minors = T::zero();
    for i in 0..4 {
        for j in i + 1..4 {
            minors = minors + m[i][i] * m[j][j] - m[i][j] * m[j][i];
        }
    }
    let two = T::lit(2.0);
    let mut disc = trace * trace - T::lit(4.0) * (minors - two);
    // Rotationally symmetric scenes have a double root; allow for round-off.
    if disc < T::zero() {
        if disc > -(trace * trace) * T::tol(1e-6) {
            disc = T::zero();
        } else {
            return Err(Error::Degenerate("return map is not hyperbolic".into()));
        }
    }
    let root = disc.sqrt();
    let mut lambda = T::one();
    for nu in [(trace + root) / two, (trace - root) / two] {
        let d2 = nu * nu - T::lit(4.0);
        if !(d2 > T::zero()) {
            return Err(Error::Degenerate("eigenvalue pair on the unit circle".into()));
        }
        // Small root of z^2 - nu z + 1, computed without cancellation.
        let small = two / (nu + nu.signum() * d2.sqrt());
        lambda = lambda * small.abs();
    }
    Ok(lambda)
}
