use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fd;
use super::weight::Weight;
use crate::error::{Error, Result};

/// Points closer than this to the singular set are skipped.
pub const SINGULAR_RADIUS: f64 = 1e-3;
/// Closed-form first and second derivatives against differences.
pub const DERIVATIVE_TOL: f64 = 1e-6;
/// Closed-form bilaplacian against differences.
pub const BILAPLACIAN_FD_TOL: f64 = 1e-4;
/// A closed-form bilaplacian above this counts as positive.
pub const SIGN_TOL: f64 = 1e-8;
/// Steps relative to the distance from the singular set.
const STEP_LOW: f64 = 1e-3;
const STEP_BILAP: f64 = 2e-3;

/// Uniform points of the ball `|x| <= radius` in `dim` dimensions, skipping
/// those within `SINGULAR_RADIUS` of the singular set. Returns the points
/// and the number skipped.
pub fn sample_ball(weight: &Weight, radius: f64, count: usize, seed: u64) -> (Vec<Vec<f64>>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = weight.dim();
    let mut out = Vec::with_capacity(count);
    let mut skipped = 0;
    while out.len() < count {
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..radius)).collect();
        if p.iter().map(|v| v * v).sum::<f64>() > radius * radius {
            continue;
        }
        if weight.singular_scale(&p) < SINGULAR_RADIUS {
            skipped += 1;
            continue;
        }
        out.push(p);
    }
    (out, skipped)
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub weight: Weight,
    pub samples: usize,
    pub skipped: usize,
    pub gradient: f64,
    pub hessian: f64,
    pub laplacian: f64,
    pub bilaplacian: f64,
    pub tol: f64,
    pub bilaplacian_tol: f64,
    pub passes: bool,
}

/// Largest relative disagreement between the closed forms and fourth-order
/// central differences. Relative errors use the natural size of each
/// derivative (`r^{1-order}`, `r` the distance scale) as a floor, so that
/// vanishing entries do not divide by zero.
pub fn check_derivatives(weight: &Weight, radius: f64, count: usize, seed: u64) -> Result<DerivativeCheck> {
    let (pts, skipped) = sample_ball(weight, radius, count, seed);
    let f = |p: &[crate::DoubleDouble]| weight.value_dd(p);
    let rows: Vec<[f64; 4]> = pts
        .par_iter()
        .map(|x| {
            let r = weight.singular_scale(x);
            let h = STEP_LOW * r;
            let g = weight.gradient(x)?;
            let gf = fd::gradient(&f, x, h);
            let eg = g.iter().zip(&gf).map(|(a, b)| rel(*a, *b, 1.0)).fold(0.0, f64::max);
            let hm = weight.hessian(x)?;
            let hf = fd::hessian(&f, x, h);
            let mut eh: f64 = 0.0;
            for (i, row) in hf.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    eh = eh.max(rel(hm[(i, j)], *v, 1.0 / r));
                }
            }
            let el = rel(weight.laplacian(x)?, fd::laplacian(&f, x, h), 1.0 / r);
            let eb = rel(weight.bilaplacian(x)?, fd::bilaplacian(&f, x, STEP_BILAP * r), r.powi(-3));
            Ok([eg, eh, el, eb])
        })
        .collect::<Result<_>>()?;
    let max = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    let (g, h, l, b) = (max(0), max(1), max(2), max(3));
    Ok(DerivativeCheck {
        weight: *weight,
        samples: pts.len(),
        skipped,
        gradient: g,
        hessian: h,
        laplacian: l,
        bilaplacian: b,
        tol: DERIVATIVE_TOL,
        bilaplacian_tol: BILAPLACIAN_FD_TOL,
        passes: g <= DERIVATIVE_TOL && h <= DERIVATIVE_TOL && l <= DERIVATIVE_TOL && b <= BILAPLACIAN_FD_TOL,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BilaplacianVerdict {
    pub weight: Weight,
    pub samples: usize,
    /// Largest closed-form `Delta^2 rho`.
    pub max_value: f64,
    /// Where it is attained.
    pub argmax: Vec<f64>,
    /// Largest relative disagreement with the differences.
    pub fd_agreement: f64,
    pub nonpositive: bool,
    pub sign_tol: f64,
    pub fd_tol: f64,
}

/// Sign of `Delta^2 rho` on samples of the unit ball, certified by
/// differences. Disagreement beyond `BILAPLACIAN_FD_TOL` is an error.
pub fn verify_bilaplacian(weight: &Weight, count: usize, seed: u64) -> Result<BilaplacianVerdict> {
    if !matches!(weight, Weight::Gauge { .. }) {
        return Err(Error::InvalidInput("bilaplacian verdicts are for gauge weights".into()));
    }
    let (pts, _) = sample_ball(weight, 1.0, count, seed);
    let f = |p: &[crate::DoubleDouble]| weight.value_dd(p);
    let rows: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|x| {
            let r = weight.singular_scale(x);
            let v = weight.bilaplacian(x)?;
            let fdv = fd::bilaplacian(&f, x, STEP_BILAP * r);
            Ok((v, rel(v, fdv, r.powi(-3))))
        })
        .collect::<Result<_>>()?;
    let fd_agreement = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if fd_agreement > BILAPLACIAN_FD_TOL {
        return Err(Error::Inconsistent(format!(
            "closed-form bilaplacian disagrees with differences ({fd_agreement:.2e})"
        )));
    }
    let (i, max_value) = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.0))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("samples");
    Ok(BilaplacianVerdict {
        weight: *weight,
        samples: pts.len(),
        argmax: pts[i].clone(),
        max_value,
        fd_agreement,
        nonpositive: max_value <= SIGN_TOL,
        sign_tol: SIGN_TOL,
        fd_tol: BILAPLACIAN_FD_TOL,
    })
}
