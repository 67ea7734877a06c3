use serde::{Deserialize, Serialize};

use super::fd;
use super::weight::Weight;
use crate::error::{Error, Result};

/// Minimum boundary sample count for an illumination margin.
pub const MIN_SAMPLES: usize = 10_000;

/// Body of revolution `y^2 + z^2 <= P(x)` with
/// `P(x) = (L^2 - x^2)(p0 + p2 x^2)`, `|x| <= L`. Thin waist, fat ends.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DogBone {
    pub half_length: f64,
    pub p0: f64,
    pub p2: f64,
}

impl Default for DogBone {
    fn default() -> Self {
        DogBone { half_length: 2.0, p0: 0.05, p2: 0.3 }
    }
}

impl DogBone {
    pub fn profile(&self, x: f64) -> f64 {
        let l = self.half_length;
        (l * l - x * x) * (self.p0 + self.p2 * x * x)
    }

    pub fn profile_derivative(&self, x: f64) -> f64 {
        let l = self.half_length;
        -2.0 * x * (self.p0 + self.p2 * x * x) + (l * l - x * x) * 2.0 * self.p2 * x
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p[0].abs() <= self.half_length && p[1] * p[1] + p[2] * p[2] <= self.profile(p[0])
    }

    /// Unit outward normal, from the gradient `(-P'(x), 2y, 2z)`.
    pub fn normal(&self, p: &[f64]) -> [f64; 3] {
        let g = [-self.profile_derivative(p[0]), 2.0 * p[1], 2.0 * p[2]];
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        [g[0] / n, g[1] / n, g[2] / n]
    }

    /// `rings x per_ring` boundary points, rings clustered toward the tips,
    /// which are excluded (the normal there is the axis and the limit is
    /// covered by the nearest ring).
    pub fn boundary_samples(&self, rings: usize, per_ring: usize) -> Vec<[f64; 3]> {
        let l = self.half_length;
        let mut out = Vec::with_capacity(rings * per_ring);
        for i in 0..rings {
            let u = std::f64::consts::PI * (i as f64 + 0.5) / rings as f64;
            let x = -l * u.cos();
            let r = self.profile(x).max(0.0).sqrt();
            for j in 0..per_ring {
                let phi = std::f64::consts::TAU * (j as f64 + 0.5 * (i % 2) as f64) / per_ring as f64;
                out.push([x, r * phi.cos(), r * phi.sin()]);
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IlluminationReport {
    pub weight: Weight,
    pub body: DogBone,
    pub samples: usize,
    /// `min grad rho . nu` over the samples.
    pub margin: f64,
    pub argmin: [f64; 3],
    pub illuminated: bool,
}

/// Illumination margin of the dog-bone by a three-dimensional gauge.
pub fn illumination(weight: &Weight, body: &DogBone, rings: usize, per_ring: usize) -> Result<IlluminationReport> {
    if weight.dim() != 3 {
        return Err(Error::InvalidInput("illumination needs a three-dimensional weight".into()));
    }
    if rings * per_ring < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!("need at least {MIN_SAMPLES} boundary samples")));
    }
    let mut margin = f64::INFINITY;
    let mut argmin = [0.0; 3];
    for p in body.boundary_samples(rings, per_ring) {
        let g = weight.gradient(&p)?;
        let n = body.normal(&p);
        let v: f64 = g.iter().zip(n).map(|(g, n)| g * n).sum();
        if v < margin {
            margin = v;
            argmin = p;
        }
    }
    Ok(IlluminationReport {
        weight: *weight,
        body: *body,
        samples: rings * per_ring,
        margin,
        argmin,
        illuminated: margin > 0.0,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtensionCheck {
    pub samples: usize,
    /// Largest relative gap between the differenced normal derivative of
    /// `sqrt(rho^2 + z^2)` and `rho/sqrt(rho^2 + z^2) d_n rho`.
    pub max_error: f64,
    pub tol: f64,
    pub passes: bool,
}

/// On `dK x {z}` the normal derivative of the extended gauge is the
/// original one damped by `rho/sqrt(rho^2 + z^2)`.
pub fn extension_check(n: usize, k: usize, eps: f64, body: &DogBone, zs: &[f64], rings: usize, per_ring: usize) -> Result<ExtensionCheck> {
    if n != 3 {
        return Err(Error::InvalidInput("the extension is checked over a three-dimensional body".into()));
    }
    let base = Weight::gauge(n, k, eps)?;
    let ext = Weight::extended(n, k, eps)?;
    let f = |p: &[crate::DoubleDouble]| ext.value_dd(p);
    let mut max_error: f64 = 0.0;
    let mut count = 0;
    for p in body.boundary_samples(rings, per_ring) {
        let nu = body.normal(&p);
        let rho = base.value(&p);
        let dn: f64 = base.gradient(&p)?.iter().zip(nu).map(|(g, n)| g * n).sum();
        for &z in zs {
            let q = [p[0], p[1], p[2], z];
            let g = fd::gradient(&f, &q, 1e-3 * rho.min(1.0));
            let lhs: f64 = g.iter().zip(nu).map(|(g, n)| g * n).sum();
            let rhs = rho / (rho * rho + z * z).sqrt() * dn;
            max_error = max_error.max((lhs - rhs).abs() / rhs.abs().max(1.0));
            count += 1;
        }
    }
    Ok(ExtensionCheck { samples: count, max_error, tol: 1e-6, passes: max_error <= 1e-6 })
}
