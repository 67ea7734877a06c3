use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks::{BILAPLACIAN_FD_TOL, SIGN_TOL, SINGULAR_RADIUS};
use super::fd;
use super::weight::Weight;
use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::linalg::Vec3;

/// Flux and curvature signs are accepted down to this.
pub const FLUX_TOL: f64 = 1e-10;
/// Differences of the two-center bilaplacian must stay below this.
pub const HARMONIC_TOL: f64 = 1e-6;
const STEP_BILAP: f64 = 2e-3;

/// Boundary samples with the outward normals of the obstacle.
#[derive(Clone, Debug, Default)]
pub struct Boundary {
    pub points: Vec<Vec<f64>>,
    pub normals: Vec<Vec<f64>>,
}

impl Boundary {
    pub fn of_scene(scene: &Scene<f64>, per_body: usize) -> Self {
        let mut b = Boundary::default();
        for j in [1, 2] {
            let body = scene.body(j);
            for p in body.boundary_samples(per_body) {
                b.points.push(p.to_f64().to_vec());
                b.normals.push(body.normal(p).to_f64().to_vec());
            }
        }
        b
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Flags {
    pub hessian_psd: bool,
    pub bilaplacian_nonpos: bool,
    pub laplacian_nonneg: bool,
    pub boundary_flux_nonneg: bool,
}

impl Flags {
    pub fn all(&self) -> bool {
        self.hessian_psd && self.bilaplacian_nonpos && self.laplacian_nonneg && self.boundary_flux_nonneg
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightReport {
    pub weight: Weight,
    pub radius: f64,
    pub interior_samples: usize,
    pub skipped: usize,
    pub boundary_samples: usize,
    pub laplacian_range: [f64; 2],
    /// Smallest, mean and largest Hessian eigenvalue over the samples.
    pub hessian_min: f64,
    pub hessian_mean: f64,
    pub hessian_max: f64,
    /// Largest closed-form bilaplacian.
    pub bilaplacian_max: f64,
    /// Largest `|Delta^2 chi|` by differences.
    pub bilaplacian_fd_max: f64,
    /// Largest relative disagreement of closed form and differences.
    pub bilaplacian_fd_agreement: f64,
    /// `min grad chi . nu` with `nu` the outward normal of the obstacle.
    pub flux_min: f64,
    pub flags: Flags,
    pub tolerances: Tolerances,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    pub flux: f64,
    pub sign: f64,
    pub harmonic: f64,
    pub fd: f64,
}

/// Sign hypotheses of the Morawetz identity for `weight`, sampled on the
/// ball `|x| <= radius` where `outside` holds, plus the flux on `boundary`.
/// Failing flags are a finding, not an error.
pub fn flux_and_identity_certificate(
    weight: &Weight,
    boundary: &Boundary,
    outside: &(dyn Fn(&[f64]) -> bool + Sync),
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<WeightReport> {
    if boundary.is_empty() || count == 0 {
        return Err(Error::InvalidInput("certificate needs boundary and interior samples".into()));
    }
    let dim = weight.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(count);
    let mut skipped = 0;
    while pts.len() < count {
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..radius)).collect();
        if p.iter().map(|v| v * v).sum::<f64>() > radius * radius || !outside(&p) {
            continue;
        }
        if weight.singular_scale(&p) < SINGULAR_RADIUS {
            skipped += 1;
            continue;
        }
        pts.push(p);
    }
    let f = |p: &[crate::DoubleDouble]| weight.value_dd(p);
    // (laplacian, min eig, mean eig, max eig, closed bilaplacian, fd bilaplacian, agreement)
    let rows: Vec<[f64; 7]> = pts
        .par_iter()
        .map(|x| {
            let r = weight.singular_scale(x);
            let ev = weight.hessian_eigenvalues(x)?;
            let mean = ev.iter().sum::<f64>() / ev.len() as f64;
            let b = weight.bilaplacian(x)?;
            let bf = fd::bilaplacian(&f, x, STEP_BILAP * r);
            let agree = (b - bf).abs() / b.abs().max(bf.abs()).max(r.powi(-3));
            Ok([weight.laplacian(x)?, ev[0], mean, ev[ev.len() - 1], b, bf, agree])
        })
        .collect::<Result<_>>()?;
    let fold = |k: usize, init: f64, op: fn(f64, f64) -> f64| rows.iter().map(|r| r[k]).fold(init, op);
    let flux: Vec<f64> = boundary
        .points
        .par_iter()
        .zip(&boundary.normals)
        .map(|(p, n)| Ok(weight.gradient(p)?.iter().zip(n).map(|(g, n)| g * n).sum::<f64>()))
        .collect::<Result<_>>()?;
    let flux_min = flux.iter().copied().fold(f64::INFINITY, f64::min);
    let lap = [fold(0, f64::INFINITY, f64::min), fold(0, f64::NEG_INFINITY, f64::max)];
    let hessian_min = fold(1, f64::INFINITY, f64::min);
    let hessian_mean = rows.iter().map(|r| r[2]).sum::<f64>() / rows.len() as f64;
    let hessian_max = fold(3, f64::NEG_INFINITY, f64::max);
    let bilaplacian_max = fold(4, f64::NEG_INFINITY, f64::max);
    let bilaplacian_fd_max = rows.iter().map(|r| r[5].abs()).fold(0.0, f64::max);
    let agreement = fold(6, 0.0, f64::max);
    let bilaplacian_nonpos = match weight {
        // the closed form is zero; the differences are the evidence
        Weight::TwoCenter { .. } => bilaplacian_fd_max <= HARMONIC_TOL,
        Weight::Gauge { .. } => bilaplacian_max <= SIGN_TOL && agreement <= BILAPLACIAN_FD_TOL,
    };
    Ok(WeightReport {
        weight: *weight,
        radius,
        interior_samples: pts.len(),
        skipped,
        boundary_samples: boundary.len(),
        laplacian_range: lap,
        hessian_min,
        hessian_mean,
        hessian_max,
        bilaplacian_max,
        bilaplacian_fd_max,
        bilaplacian_fd_agreement: agreement,
        flux_min,
        flags: Flags {
            hessian_psd: hessian_min >= -FLUX_TOL,
            bilaplacian_nonpos,
            laplacian_nonneg: lap[0] >= -FLUX_TOL,
            boundary_flux_nonneg: flux_min >= -FLUX_TOL,
        },
        tolerances: Tolerances { flux: FLUX_TOL, sign: SIGN_TOL, harmonic: HARMONIC_TOL, fd: BILAPLACIAN_FD_TOL },
        seed,
    })
}

/// The certificate for a three-dimensional weight outside the obstacles of
/// `scene`.
pub fn scene_certificate(weight: &Weight, scene: &Scene<f64>, radius: f64, count: usize, per_body: usize, seed: u64) -> Result<WeightReport> {
    if weight.dim() != 3 {
        return Err(Error::InvalidInput("scene certificates need a three-dimensional weight".into()));
    }
    let boundary = Boundary::of_scene(scene, per_body);
    let outside = |p: &[f64]| scene.outside_bodies(Vec3::new(p[0], p[1], p[2]));
    flux_and_identity_certificate(weight, &boundary, &outside, radius, count, seed)
}
