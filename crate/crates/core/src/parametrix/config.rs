use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::linalg::Vec3;
use crate::trapped::smooth_step;

/// Spatial dimension; fixed.
pub const DIM: u32 = 3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParametrixConfig {
    pub h: f64,
    /// `eps` of the time window `[t_start, eps |log h|]`.
    pub window_eps: f64,
    /// `eps` of the cutoff and of the remainder budget.
    pub cutoff_eps: f64,
    /// Measured shrinkage rate `c`.
    pub c_est: f64,
    /// Number of transport terms in the ansatz.
    pub k: u32,
    /// Transport orders kept in the reflected sum.
    pub k0: usize,
    pub alpha0: f64,
    pub beta0: f64,
    pub y: Vec3<f64>,
    /// Near-source exclusion radius.
    pub eta: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Points of `supp chi_0` for the supremum.
    pub samples: usize,
    pub seed: u64,
    pub radial_tol: f64,
}

impl ParametrixConfig {
    /// Defaults for `scene`: `eps_cut = 1/(4c)`, so that `2 c eps = 1/2`,
    /// `K = 26`, one correction term, `y` at the middle of the trapped ray.
    pub fn new(scene: &Scene<f64>, h: f64, c_est: f64) -> Result<Self> {
        let window_eps = 3.0;
        let cfg = Self {
            h,
            window_eps,
            cutoff_eps: 0.25 / c_est,
            c_est,
            k: 26,
            k0: 1,
            alpha0: 0.5,
            beta0: 2.0,
            y: scene.midpoint(),
            eta: 0.1 * scene.gap(),
            t_start: 2.0,
            t_end: window_eps * h.ln().abs(),
            dt: 0.05,
            samples: 12,
            seed: 7,
            radial_tol: 1e-8,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_k(mut self, k: u32) -> Result<Self> {
        self.k = k;
        self.validate()?;
        Ok(self)
    }

    pub fn with_times(mut self, t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        self.t_start = t_start;
        self.t_end = t_end;
        self.dt = dt;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h < 0.5) {
            return Err(Error::InvalidInput(format!("h = {} outside (0, 1/2)", self.h)));
        }
        if !(0.0 < self.alpha0 && self.alpha0 < self.beta0) {
            return Err(Error::InvalidInput("need 0 < alpha0 < beta0".into()));
        }
        if !(self.c_est > 0.0 && self.cutoff_eps > 0.0 && self.window_eps > 0.0) {
            return Err(Error::InvalidInput("c_est and both eps must be positive".into()));
        }
        if !(self.t_start > 0.0 && self.t_end >= self.t_start && self.dt > 0.0) {
            return Err(Error::InvalidInput("need 0 < t_start <= t_end and dt > 0".into()));
        }
        if !(self.eta > 0.0 && self.radial_tol > 0.0) || self.samples == 0 {
            return Err(Error::InvalidInput("eta, radial_tol and samples must be positive".into()));
        }
        let b = budget_exponents(self);
        if b.exponent < b.target {
            return Err(Error::Budget {
                reason: format!(
                    "K(1 - 2c eps) - d(2 + c eps) = {:.3} < {:.3} for K = {}",
                    b.exponent, b.target, self.k
                ),
                minimal_k: Some(b.minimal_k),
            });
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let n = ((self.t_end - self.t_start) / self.dt + 1e-9).floor() as usize;
        (0..=n).map(|i| self.t_start + i as f64 * self.dt).collect()
    }
}

/// The frequency shell `psi(s)`: a smooth bump equal to 1 on the middle of
/// `[alpha0, beta0]`.
pub fn shell_bump(cfg: &ParametrixConfig, s: f64) -> f64 {
    let d = (cfg.beta0 - cfg.alpha0) / 8.0;
    smooth_step((s - cfg.alpha0) / d) * smooth_step((cfg.beta0 - s) / d)
}

struct Exponents {
    exponent: f64,
    target: f64,
    minimal_k: u32,
}

fn budget_exponents(cfg: &ParametrixConfig) -> Exponents {
    let d = DIM as f64;
    let ce = cfg.c_est * cfg.cutoff_eps;
    let target = -(d + 1.0) / 2.0 + 1.0;
    let rate = 1.0 - 2.0 * ce;
    let minimal_k = if rate > 0.0 {
        ((target + d * (2.0 + ce)) / rate).ceil().max(0.0) as u32
    } else {
        u32::MAX
    };
    Exponents {
        exponent: cfg.k as f64 * rate - d * (2.0 + ce),
        target,
        minimal_k,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RemainderBudget {
    pub k: u32,
    pub c_eps: f64,
    /// `K(1 - 2c eps) - d(2 + c eps)`.
    pub exponent: f64,
    /// `-(d + 1)/2 + 1`.
    pub target: f64,
    /// `K/2 - 3d - 1`, the simplified left side valid when `2c eps <= 1/2`.
    pub simplified: f64,
    pub minimal_k: u32,
    pub minimal_k_simplified: u32,
    pub t: Vec<f64>,
    /// `|log h| h^{exponent} (1 + t)^{d/2 + 1}` with unit constant.
    pub remainder: Vec<f64>,
    /// `h^{-(d+1)/2} e^{-t/eps}`.
    pub implied_bound: Vec<f64>,
}

/// The scalar remainder budget. Rejects the configuration, with the smallest
/// `K` that fixes it, when the simplified sufficiency condition fails.
pub fn remainder_budget(cfg: &ParametrixConfig) -> Result<RemainderBudget> {
    let d = DIM as f64;
    let b = budget_exponents(cfg);
    let ce = cfg.c_est * cfg.cutoff_eps;
    let simplified = cfg.k as f64 / 2.0 - 3.0 * d - 1.0;
    let minimal_k_simplified = (2.0 * (b.target + 3.0 * d + 1.0)).ceil() as u32;
    if 2.0 * ce > 0.5 + 1e-12 {
        return Err(Error::Budget {
            reason: format!("2c eps = {:.3} > 1/2; lower the cutoff eps", 2.0 * ce),
            minimal_k: None,
        });
    }
    if simplified < b.target || b.exponent < b.target {
        return Err(Error::Budget {
            reason: format!("K/2 - 3d - 1 = {simplified} < {} for K = {}", b.target, cfg.k),
            minimal_k: Some(minimal_k_simplified.max(b.minimal_k)),
        });
    }
    let t = cfg.times();
    let lh = cfg.h.ln().abs();
    Ok(RemainderBudget {
        k: cfg.k,
        c_eps: ce,
        exponent: b.exponent,
        target: b.target,
        simplified,
        minimal_k: b.minimal_k,
        minimal_k_simplified,
        remainder: t.iter().map(|&t| lh * cfg.h.powf(b.exponent) * (1.0 + t).powf(d / 2.0 + 1.0)).collect(),
        implied_bound: t.iter().map(|&t| cfg.h.powf(-(d + 1.0) / 2.0) * (-t / cfg.window_eps).exp()).collect(),
        t,
    })
}
