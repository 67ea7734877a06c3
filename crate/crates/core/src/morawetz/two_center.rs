use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checks::SINGULAR_RADIUS;
use super::weight::Weight;
use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::linalg::Vec3;

/// `lambda_2 = (1/2)(1/|x-c| + 1/|x| + sqrt((1/|x-c| + 1/|x|)^2 - 4 sin^2(theta)/(|x||x-c|)))`.
pub fn lambda2(x: Vec3<f64>, c: Vec3<f64>) -> f64 {
    let (a, b) = (x.norm(), (x - c).norm());
    let s2 = sin2_theta(x, c);
    let t = 1.0 / a + 1.0 / b;
    0.5 * (t + (t * t - 4.0 * s2 / (a * b)).max(0.0).sqrt())
}

/// `sin^2` of the angle between `x/|x|` and `(x - c)/|x - c|`.
pub fn sin2_theta(x: Vec3<f64>, c: Vec3<f64>) -> f64 {
    let cos = x.normalize().dot((x - c).normalize()).clamp(-1.0, 1.0);
    1.0 - cos * cos
}

/// Largest eigenvalue of `x x^T/|x|^3 + (x-c)(x-c)^T/|x-c|^3` by a dense
/// symmetric eigensolve: the independent value of `lambda_2`.
pub fn lambda2_eigensolve(x: Vec3<f64>, c: Vec3<f64>) -> f64 {
    let mut m = Matrix3::zeros();
    for p in [x, x - c] {
        let v = Vector3::new(p.x, p.y, p.z);
        m += v * v.transpose() / p.norm().powi(3);
    }
    SymmetricEigen::new(m).eigenvalues.max()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoCenterReport {
    pub c: [f64; 3],
    pub radius: f64,
    pub alpha: f64,
    pub samples: usize,
    pub skipped: usize,
    /// Largest `|lambda_2 formula - eigensolve|`.
    pub lambda2_error: f64,
    /// Fraction of samples of `Omega ∩ B(0, A)` in `V(alpha)`.
    pub in_v: f64,
    /// Monte-Carlo measure of `(Omega ∩ B(0, A)) \ V(alpha)`.
    pub excluded_measure: f64,
    /// `inf (D^2 chi xi, xi) / (alpha |xi|^2)` over `V(alpha)` and random `xi`.
    pub form_constant: f64,
    /// The same with the exact smallest eigenvalue instead of random `xi`.
    pub form_constant_exact: f64,
    pub seed: u64,
}

/// `lambda_2`, `V(alpha)` and the quadratic-form constant over uniform
/// samples of `B(0, A)` outside the obstacles of `scene`.
pub fn two_center_analysis(scene: &Scene<f64>, c: Vec3<f64>, radius: f64, alpha: f64, count: usize, seed: u64) -> Result<TwoCenterReport> {
    if !(radius > c.norm()) {
        return Err(Error::InvalidInput(format!("need A > |c| = {}", c.norm())));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput("alpha must lie in (0, 1)".into()));
    }
    let w = Weight::TwoCenter { c: c.to_f64() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut n, mut skipped, mut inside_v) = (0usize, 0usize, 0usize);
    let mut lambda2_error: f64 = 0.0;
    let mut form: f64 = f64::INFINITY;
    let mut form_exact: f64 = f64::INFINITY;
    let mut drawn = 0usize;
    while n < count {
        drawn += 1;
        let x = Vec3::new(
            rng.gen_range(-radius..radius),
            rng.gen_range(-radius..radius),
            rng.gen_range(-radius..radius),
        );
        if x.norm() > radius || !scene.outside_bodies(x) {
            continue;
        }
        if x.norm() < SINGULAR_RADIUS || (x - c).norm() < SINGULAR_RADIUS {
            skipped += 1;
            continue;
        }
        n += 1;
        lambda2_error = lambda2_error.max((lambda2(x, c) - lambda2_eigensolve(x, c)).abs());
        if sin2_theta(x, c) >= alpha {
            inside_v += 1;
            let h = w.hessian(&x.to_f64())?;
            for _ in 0..16 {
                let xi: Vector3<f64> = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let xi = xi / xi.norm();
                let q = (xi.transpose() * &h * xi)[(0, 0)];
                form = form.min(q / alpha);
            }
            let lmin = w.hessian_eigenvalues(&x.to_f64())?[0];
            form_exact = form_exact.min(lmin / alpha);
        }
    }
    // accepted points are uniform on Omega ∩ B(0, A) ∩ cube-draws
    let cube = (2.0 * radius).powi(3);
    let omega_ball = cube * (n + skipped) as f64 / drawn as f64;
    let in_v = inside_v as f64 / n as f64;
    Ok(TwoCenterReport {
        c: c.to_f64(),
        radius,
        alpha,
        samples: n,
        skipped,
        lambda2_error,
        in_v,
        excluded_measure: omega_ball * (1.0 - in_v),
        form_constant: form,
        form_constant_exact: form_exact,
        seed,
    })
}
