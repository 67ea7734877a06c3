use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::phase_space_exit;
use crate::billiard::Section;
use crate::error::{Error, Result};
use crate::fit::log_log_fit;
use crate::geometry::{Cylinder, Scene};
use crate::linalg::Vec3;

/// `C^inf` step: 0 for `u <= 0`, 1 for `u >= 1`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

/// Smallest phase-space smoothing scale `h^{2c eps}` we accept.
const MIN_WIDTH: f64 = 1e-6;

/// The cutoff `q(x, xi)`: a smooth step in the exit time from `D` around the
/// support time `2 eps |log h|`, times a collar inside `U_inf` and a bump on
/// the frequency shell `[alpha0, beta0]`.
///
/// A step of unit width in time is a step of width about `h^{2c eps}` in
/// phase space, the scale of the mollifier.
#[derive(Clone, Debug)]
pub struct CutoffSymbol {
    pub eps: f64,
    pub h: f64,
    pub c_est: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub support_time: f64,
    pub width: f64,
    /// Collar width in units of the cylinder gauge.
    pub collar: f64,
    pub region: Cylinder<f64>,
    pub u_infinity: Cylinder<f64>,
    scene: Scene<f64>,
}

impl CutoffSymbol {
    pub fn shell(&self, s: f64) -> f64 {
        let d = (self.beta0 - self.alpha0) / 8.0;
        smooth_step((s - self.alpha0) / d) * smooth_step((self.beta0 - s) / d)
    }

    /// Smooth collar inside `U_inf` and away from both boundaries. A product
    /// of one-sided steps, so that it stays `C^inf` across the cylinder rim
    /// where the gauge `nu` has a corner.
    pub fn position_factor(&self, x: Vec3<f64>) -> f64 {
        let u = &self.u_infinity;
        let d = x - u.a1;
        let half = 0.5 * u.gap;
        let radial = 1.0 - d.reject(u.axis).norm() / u.radius;
        let axial = 1.0 - (d.dot(u.axis) - half).abs() / half;
        let mut f = smooth_step(radial / self.collar) * smooth_step(axial / self.collar);
        if f == 0.0 {
            return 0.0;
        }
        for j in [1, 2] {
            f *= smooth_step(self.scene.body(j).level(x) / (self.collar * half));
        }
        f
    }

    pub fn time_factor(&self, x: Vec3<f64>, dir: Vec3<f64>) -> f64 {
        let tau = phase_space_exit(&self.scene, x, dir, &self.region, self.support_time + 1.0);
        smooth_step(tau - self.support_time)
    }

    pub fn eval(&self, x: Vec3<f64>, xi: Vec3<f64>) -> f64 {
        let s = xi.norm();
        let shell = self.shell(s);
        if shell == 0.0 {
            return 0.0;
        }
        let pos = self.position_factor(x);
        if pos == 0.0 {
            return 0.0;
        }
        shell * pos * self.time_factor(x, xi / s)
    }
}

pub fn build_cutoff(scene: &Scene<f64>, eps: f64, h: f64, alpha0: f64, beta0: f64, c_est: f64) -> Result<CutoffSymbol> {
    if !(h > 0.0 && h < 0.5) || !(eps > 0.0) || !(c_est > 0.0) {
        return Err(Error::InvalidInput("cutoff needs 0 < h < 1/2, eps > 0 and c > 0".into()));
    }
    if !(0.0 < alpha0 && alpha0 < beta0) {
        return Err(Error::InvalidInput("need 0 < alpha0 < beta0".into()));
    }
    let width = h.powf(2.0 * c_est * eps);
    if width < MIN_WIDTH {
        return Err(Error::Resolution(format!(
            "smoothing width h^(2c eps) = {width:.2e} is below the resolution floor {MIN_WIDTH:.0e}"
        )));
    }
    Ok(CutoffSymbol {
        eps,
        h,
        c_est,
        alpha0,
        beta0,
        support_time: 2.0 * eps * h.ln().abs(),
        width,
        collar: 0.15,
        region: scene.default_region(),
        u_infinity: scene.u_infinity(),
        scene: scene.clone(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CutoffLadder {
    pub hs: Vec<f64>,
    pub sup_dx: Vec<f64>,
    pub sup_dxi: Vec<f64>,
    /// Fitted `a` in `sup |dq| ~ h^{-a}`.
    pub exponent_x: f64,
    pub exponent_xi: f64,
    /// `2 c eps`, the predicted exponent.
    pub predicted: f64,
}

/// Sup of `|dq/dq1|` and `|dq/dp1|` along log-spaced transverse scans
/// through the midpoint section, for each `h`, with the fitted exponents.
pub fn cutoff_derivative_ladder(scene: &Scene<f64>, eps: f64, c_est: f64, hs: &[f64], scan: usize) -> Result<CutoffLadder> {
    let sec = Section::of(scene);
    let reach = scene.cylinder_radius;
    let offsets: Vec<f64> = (0..scan)
        .map(|i| reach * 10f64.powf(-9.0 * (1.0 - i as f64 / (scan - 1) as f64)))
        .collect();
    let mut sup_dx = Vec::with_capacity(hs.len());
    let mut sup_dxi = Vec::with_capacity(hs.len());
    for &h in hs {
        let q = build_cutoff(scene, eps, h, 0.5, 2.0, c_est)?;
        let eval = |c: [f64; 4]| {
            let (x, d) = sec.state(c);
            q.eval(x, d)
        };
        let (dx, dxi) = offsets
            .par_iter()
            .map(|&o| {
                let step = o * 1e-3;
                let gx = (eval([o + step, 0.0, 0.0, 0.0]) - eval([o - step, 0.0, 0.0, 0.0])) / (2.0 * step);
                let gp = (eval([0.0, 0.0, o + step, 0.0]) - eval([0.0, 0.0, o - step, 0.0])) / (2.0 * step);
                (gx.abs(), gp.abs())
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        sup_dx.push(dx);
        sup_dxi.push(dxi);
    }
    let inv: Vec<f64> = hs.iter().map(|h| 1.0 / h).collect();
    let exponent = |ys: &[f64]| log_log_fit(&inv, ys).map_or(f64::NAN, |f| f.slope);
    Ok(CutoffLadder {
        exponent_x: exponent(&sup_dx),
        exponent_xi: exponent(&sup_dxi),
        predicted: 2.0 * c_est * eps,
        hs: hs.to_vec(),
        sup_dx,
        sup_dxi,
    })
}
