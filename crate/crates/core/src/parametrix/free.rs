use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use super::config::{shell_bump, ParametrixConfig};
use super::curve::DecayCurve;
use crate::error::{Error, Result};
use crate::linalg::Vec3;

/// Nodes of the first radial rule; doubled until the value settles.
pub const RADIAL_NODES: usize = 64;
const MAX_NODES: usize = 4096;

/// `int_a^b f(s) ds` by Gauss-Legendre with node doubling until the change
/// is below `tol` relative to `int |f|`, so that cancelling integrals
/// still terminate.
pub fn radial_quadrature<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let rule = |n: usize| -> Result<(f64, f64)> {
        let r = GaussLegendre::new(n).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut v = 0.0;
        let mut m = 0.0;
        let (c, w) = (0.5 * (a + b), 0.5 * (b - a));
        for &(x, wt) in r.iter() {
            let y = f(c + w * x);
            v += wt * y;
            m += wt * y.abs();
        }
        Ok((w * v, w * m))
    };
    let mut n = RADIAL_NODES;
    let (mut prev, _) = rule(n)?;
    let mut last = f64::NAN;
    while n < MAX_NODES {
        n *= 2;
        let (next, mass) = rule(n)?;
        last = (next - prev).abs();
        if last <= tol * mass || mass == 0.0 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NoConvergence {
        what: "radial quadrature (raise the node cap or lower h)",
        iterations: MAX_NODES,
        residual: last,
    })
}

/// `S_K^0(x, t)` at `r = |x - y|` by the sphere-reduced radial integral
/// `(2 pi h)^-3 (4 pi h / r) int psi(s) s cos(ts/h) sin(sr/h) ds`.
///
/// The sphere integral of a linear phase is exactly the sum of its two
/// stationary-phase terms, one at each antipodal critical direction.
pub fn free_value(cfg: &ParametrixConfig, r: f64, t: f64) -> Result<f64> {
    let h = cfg.h;
    let pref = (2.0 * PI * h).powi(-3) * 4.0 * PI * h;
    if r < 1e-9 {
        // sin(sr/h)/r -> s/h
        let v = radial_quadrature(|s| shell_bump(cfg, s) * s * s * (t * s / h).cos(), cfg.alpha0, cfg.beta0, cfg.radial_tol)?;
        return Ok(pref * v / h);
    }
    let v = radial_quadrature(
        |s| shell_bump(cfg, s) * s * (t * s / h).cos() * (s * r / h).sin(),
        cfg.alpha0,
        cfg.beta0,
        cfg.radial_tol,
    )?;
    Ok(pref * v / r)
}

/// Brute-force `(2 pi h)^-3 int psi(|xi|) cos(t|xi|/h) e^{i (x - y)·xi / h} dxi`
/// in spherical coordinates about the `z` axis, real part.
pub fn free_brute_force(cfg: &ParametrixConfig, x: Vec3<f64>, t: f64, n_s: usize, n_theta: usize, n_phi: usize) -> Result<f64> {
    let h = cfg.h;
    let v = x - cfg.y;
    let rs = GaussLegendre::new(n_s).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let rc = GaussLegendre::new(n_theta).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let cos_nodes: Vec<(f64, f64)> = rc.iter().copied().collect();
    let total: f64 = rs
        .iter()
        .copied()
        .collect::<Vec<(f64, f64)>>()
        .par_iter()
        .map(|&(sn, sw)| {
            let s = 0.5 * (cfg.beta0 - cfg.alpha0) * sn + 0.5 * (cfg.beta0 + cfg.alpha0);
            let ws = 0.5 * (cfg.beta0 - cfg.alpha0) * sw;
            let amp = shell_bump(cfg, s) * (t * s / h).cos() * s * s;
            if amp == 0.0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for &(c, wc) in &cos_nodes {
                let sin = (1.0 - c * c).sqrt();
                let mut ring = 0.0;
                for k in 0..n_phi {
                    let p = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
                    let w = Vec3::new(sin * p.cos(), sin * p.sin(), c);
                    ring += (s * v.dot(w) / h).cos();
                }
                acc += wc * ring * 2.0 * PI / n_phi as f64;
            }
            ws * amp * acc
        })
        .sum();
    Ok((2.0 * PI * h).powi(-3) * total)
}

/// `sup_r |S_K^0(r, t)|`: a scan of `r` around the light cone at spacing
/// `h/8`, then golden-section refinement of the best bracket.
pub fn free_sup(cfg: &ParametrixConfig, t: f64) -> Result<(f64, f64)> {
    let lo = (t - 1.0).max(0.0);
    let hi = t + 1.0;
    let dr = cfg.h / 8.0;
    let n = ((hi - lo) / dr).ceil() as usize;
    let vals: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let r = lo + i as f64 * dr;
            free_value(cfg, r, t).map(|v| (r, v.abs()))
        })
        .collect::<Result<_>>()?;
    let (imax, &(mut r_best, mut best)) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("nonempty scan");
    let (mut a, mut b) = (vals[imax.saturating_sub(1)].0, vals[(imax + 1).min(n)].0);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let f = |r: f64| free_value(cfg, r, t).map(f64::abs);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..40 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    for (r, v) in [(c, fc), (d, fd)] {
        if v > best {
            best = v;
            r_best = r;
        }
    }
    Ok((r_best, best))
}

/// `sup_x |S_K^0|` over `cfg.times()` with the power-law fit.
pub fn free_term(cfg: &ParametrixConfig) -> Result<DecayCurve> {
    let t = cfg.times();
    if t.iter().any(|&t| t <= 0.0) {
        return Err(Error::InvalidInput("free term needs t > 0".into()));
    }
    let sup: Vec<f64> = t.par_iter().map(|&t| free_sup(cfg, t).map(|v| v.1)).collect::<Result<_>>()?;
    Ok(DecayCurve::new(cfg.h, t, sup))
}

/// Largest `|S_K^0|` with `|x - y| < eta`, the part dropped by the
/// near-source exclusion, relative to the full supremum at the same `t`.
pub fn dropped_fraction(cfg: &ParametrixConfig, t: f64) -> Result<f64> {
    let n = 32;
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        let r = cfg.eta * i as f64 / n as f64;
        worst = worst.max(free_value(cfg, r, t)?.abs());
    }
    Ok(worst / free_sup(cfg, t)?.1)
}
