use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{shell_bump, ParametrixConfig};
use super::critical::{critical_point, StationaryPhaseData};
use super::curve::DecayCurve;
use super::free::{free_sup, free_value, radial_quadrature};
use crate::amplitude::{amplitude_eval, chi0_samples, AmplitudeConfig, TermSpec, TracedPhase};
use crate::billiard::Story;
use crate::dd::DoubleDouble;
use num_traits::Float;
use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::linalg::Vec3;
use crate::phase::Sign;
use crate::trapped::CutoffSymbol;

/// Spacing of the coarse time grid on which `w_1` is evaluated and then
/// interpolated.
pub const A1_STEP: f64 = 0.25;
/// Largest share of contributions that may be excluded as degenerate.
pub const MAX_EXCLUDED: f64 = 0.01;

/// `s (phi - t) / h` reduced to `[0, 2 pi)` in double-double.
pub fn reduced_phase(phi: f64, t: f64, s: f64, h: f64) -> f64 {
    let tau = DoubleDouble::new(2.0 * PI) + DoubleDouble::new(2.449_293_598_294_706_4e-16);
    let theta = (DoubleDouble::new(phi) - DoubleDouble::new(t)) * DoubleDouble::new(s) / DoubleDouble::new(h);
    let k = (theta / tau).floor();
    (theta - k * tau).to_f64()
}

/// `F_p = int psi(s) s^p e^{i sigma s (phi - t)/h} ds`.
pub fn radial_factor(cfg: &ParametrixConfig, p: i32, phi: f64, t: f64, sigma: f64) -> Result<Complex64> {
    let re = radial_quadrature(
        |s| shell_bump(cfg, s) * s.powi(p) * reduced_phase(phi, t, s, cfg.h).cos(),
        cfg.alpha0,
        cfg.beta0,
        cfg.radial_tol,
    )?;
    let im = radial_quadrature(
        |s| shell_bump(cfg, s) * s.powi(p) * reduced_phase(phi, t, s, cfg.h).sin(),
        cfg.alpha0,
        cfg.beta0,
        cfg.radial_tol,
    )?;
    Ok(Complex64::new(re, sigma * im))
}

/// All stories with `1 <= |J| <= max_len`, starting on either body.
pub fn story_list(max_len: usize) -> Vec<Story> {
    let mut out = Vec::new();
    for n in 1..=max_len {
        for first in [1, 2] {
            out.push(Story::alternating(first, n));
        }
    }
    out
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ContributionStats {
    pub retained: usize,
    /// Degenerate restricted Hessians, excluded.
    pub degenerate: usize,
    /// Dropped by the near-source exclusion.
    pub near_source: usize,
    /// No selected critical direction (outside the phase domain).
    pub no_critical: usize,
    /// Smallest `det` among retained contributions.
    pub min_det: f64,
    /// Largest criticality residual among retained contributions.
    pub max_residual: f64,
}

impl ContributionStats {
    fn merge(&mut self, o: &ContributionStats) {
        self.retained += o.retained;
        self.degenerate += o.degenerate;
        self.near_source += o.near_source;
        self.no_critical += o.no_critical;
        self.min_det = self.min_det.min(o.min_det);
        self.max_residual = self.max_residual.max(o.max_residual);
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReflectedCurve {
    /// `sup_x |chi_0 S_K^r|`.
    pub curve: DecayCurve,
    /// `sup_x |S_K^0 + chi_0 S_K^r|`, with the free part also taken over all `x`.
    pub combined: Vec<f64>,
    pub max_len: usize,
    pub samples: Vec<[f64; 3]>,
    pub stats: ContributionStats,
}

impl ReflectedCurve {
    /// `h^{(d+1)/2} t^{(d-1)/2} combined`.
    pub fn combined_normalized(&self) -> Vec<f64> {
        let h2 = self.curve.h * self.curve.h;
        self.curve.t.iter().zip(&self.combined).map(|(t, v)| h2 * t * v).collect()
    }
}

/// One `(J, ±)` term at one point, ready to be summed over `t`.
struct Term {
    data: StationaryPhaseData,
    sigma: f64,
    a0: Vec<f64>,
    a1: Vec<f64>,
}

fn leading(traced: &TracedPhase, t: f64, q: &CutoffSymbol) -> f64 {
    if t < traced.l_j() {
        return 0.0;
    }
    0.5 * traced.lambda * q.eval(traced.backward_point(t), traced.xi)
}

fn interpolate(grid: &[(f64, f64)], t: f64) -> f64 {
    match grid.windows(2).find(|w| w[0].0 <= t && t <= w[1].0) {
        Some(w) => {
            let f = (t - w[0].0) / (w[1].0 - w[0].0);
            w[0].1 * (1.0 - f) + w[1].1 * f
        }
        None => 0.0,
    }
}

#[allow(clippy::too_many_arguments)]
fn build_term(
    scene: &Scene<f64>,
    cfg: &ParametrixConfig,
    q: &CutoffSymbol,
    x: Vec3<f64>,
    story: &Story,
    sign: Sign,
    ts: &[f64],
    stats: &mut ContributionStats,
) -> Result<Option<Term>> {
    let data = match critical_point(scene, x, cfg.y, story, 1.0, sign, cfg.eta) {
        Ok(Some(d)) => d,
        Ok(None) => {
            stats.near_source += 1;
            return Ok(None);
        }
        Err(Error::Domain(_)) | Err(Error::NoConvergence { .. }) => {
            stats.no_critical += 1;
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    if data.degenerate {
        stats.degenerate += 1;
        return Ok(None);
    }
    let dir = Vec3::from_f64(data.dir);
    let xi = sign.apply(dir);
    let traced = TracedPhase::solve(scene, x, xi, story, cfg.y, sign, None)?;
    let a0: Vec<f64> = ts.iter().map(|&t| leading(&traced, t, q)).collect();
    let mut a1 = vec![0.0; ts.len()];
    let support: Vec<f64> = ts.iter().zip(&a0).filter(|(_, a)| **a != 0.0).map(|(t, _)| *t).collect();
    if cfg.k0 >= 1 {
        if let (Some(&lo), Some(&hi)) = (support.first(), support.last()) {
            let mut acfg = AmplitudeConfig::new(cfg.y, cfg.h);
            acfg.panel = 1.0;
            acfg.nodes = 4;
            let term = TermSpec::new(story.clone(), sign, 1);
            let k_lo = ((lo - A1_STEP) / A1_STEP).floor().max(0.0) as usize;
            let k_hi = ((hi + A1_STEP) / A1_STEP).ceil() as usize;
            let grid: Vec<(f64, f64)> = (k_lo..=k_hi)
                .map(|k| {
                    let t = k as f64 * A1_STEP;
                    amplitude_eval(scene, &term, x, t, xi, q, &acfg).map(|v| (t, v))
                })
                .collect::<Result<_>>()?;
            for (a, &t) in a1.iter_mut().zip(ts) {
                *a = interpolate(&grid, t);
            }
        }
    }
    stats.retained += 1;
    stats.min_det = stats.min_det.min(data.det.abs());
    stats.max_residual = stats.max_residual.max(data.residual);
    Ok(Some(Term {
        sigma: if sign == Sign::Plus { 1.0 } else { -1.0 },
        data,
        a0,
        a1,
    }))
}

/// `(2 pi h)^-3 (2 pi h) e^{i sigma pi sgn/4} |det|^{-1/2}
/// [a_0 F_1 + i sigma h a_1 F_0]`: the shell-by-shell stationary phase of
/// one term, integrated over the radius.
fn term_value(cfg: &ParametrixConfig, term: &Term, i: usize, t: f64) -> Result<Complex64> {
    let (a0, a1) = (term.a0[i], term.a1[i]);
    if a0 == 0.0 && a1 == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let h = cfg.h;
    let c = (2.0 * PI * h).powi(-2);
    let sig = term.data.signature as f64;
    let rot = Complex64::from_polar(1.0, term.sigma * PI * sig / 4.0);
    let pre = c * rot / term.data.det.abs().sqrt();
    let phi = term.data.phase;
    let mut v = radial_factor(cfg, 1, phi, t, term.sigma)? * a0;
    if a1 != 0.0 {
        v += Complex64::new(0.0, term.sigma * h * a1) * radial_factor(cfg, 0, phi, t, term.sigma)?;
    }
    Ok(pre * v)
}

/// `sup_x |chi_0 S_K^r(x, t)|` over `chi_0` samples, stories up to `max_len`
/// and both waves, with the free term added for the combined curve.
pub fn reflected_sum(scene: &Scene<f64>, cfg: &ParametrixConfig, q: &CutoffSymbol, max_len: usize) -> Result<ReflectedCurve> {
    reflected_inner(scene, cfg, q, max_len, true)
}

fn reflected_inner(
    scene: &Scene<f64>,
    cfg: &ParametrixConfig,
    q: &CutoffSymbol,
    max_len: usize,
    with_free: bool,
) -> Result<ReflectedCurve> {
    if max_len == 0 {
        return Err(Error::InvalidInput("story budget must be at least 1".into()));
    }
    let ts = cfg.times();
    let xs = chi0_samples(scene, cfg.samples, q.collar, cfg.seed);
    if xs.len() < cfg.samples {
        return Err(Error::Resolution("could not place the chi_0 samples".into()));
    }
    let stories = story_list(max_len);
    let per_x: Vec<(Vec<Complex64>, Vec<f64>, ContributionStats)> = xs
        .par_iter()
        .map(|&x| {
            let mut stats = ContributionStats { min_det: f64::INFINITY, ..Default::default() };
            let mut sum = vec![Complex64::new(0.0, 0.0); ts.len()];
            for story in &stories {
                for sign in [Sign::Plus, Sign::Minus] {
                    let Some(term) = build_term(scene, cfg, q, x, story, sign, &ts, &mut stats)? else {
                        continue;
                    };
                    for (i, &t) in ts.iter().enumerate() {
                        sum[i] += term_value(cfg, &term, i, t)?;
                    }
                }
            }
            let free: Vec<f64> = if with_free {
                ts.iter().map(|&t| free_value(cfg, (x - cfg.y).norm(), t)).collect::<Result<_>>()?
            } else {
                vec![0.0; ts.len()]
            };
            Ok((sum, free, stats))
        })
        .collect::<Result<_>>()?;

    let mut stats = ContributionStats { min_det: f64::INFINITY, ..Default::default() };
    for (_, _, s) in &per_x {
        stats.merge(s);
    }
    let total = stats.retained + stats.degenerate;
    if total > 0 && stats.degenerate as f64 > MAX_EXCLUDED * total as f64 {
        return Err(Error::Inconsistent(format!(
            "{} of {} contributions have degenerate Hessians",
            stats.degenerate, total
        )));
    }
    let mut sup = vec![0.0f64; ts.len()];
    let mut combined = vec![0.0f64; ts.len()];
    for (sum, free, _) in &per_x {
        for i in 0..ts.len() {
            sup[i] = sup[i].max(sum[i].norm());
            combined[i] = combined[i].max((sum[i] + free[i]).norm());
        }
    }
    if with_free {
        let free: Vec<f64> = ts.par_iter().map(|&t| free_sup(cfg, t).map(|v| v.1)).collect::<Result<_>>()?;
        for (c, f) in combined.iter_mut().zip(free) {
            *c = c.max(f);
        }
    }
    Ok(ReflectedCurve {
        curve: DecayCurve::new(cfg.h, ts, sup),
        combined,
        max_len,
        samples: xs.iter().map(|x| x.to_f64()).collect(),
        stats,
    })
}

/// Story budget from the window arithmetic: a story of length `n` has phase
/// above `(n - 1) gap` at every point of `chi_0`, so lengths beyond
/// `t_end / gap + 1` carry no amplitude inside the window.
pub fn default_budget(scene: &Scene<f64>, cfg: &ParametrixConfig) -> usize {
    (cfg.t_end / scene.gap()).ceil() as usize + 1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BudgetDoubling {
    pub base: ReflectedCurve,
    pub doubled_len: usize,
    pub doubled: Vec<f64>,
    /// Largest pointwise `|doubled - base| / base`.
    pub max_relative_change: f64,
}

pub fn budget_doubling(scene: &Scene<f64>, cfg: &ParametrixConfig, q: &CutoffSymbol, max_len: usize) -> Result<BudgetDoubling> {
    let base = reflected_sum(scene, cfg, q, max_len)?;
    // The free part does not depend on the budget.
    let doubled = reflected_inner(scene, cfg, q, 2 * max_len, false)?;
    let max_relative_change = base
        .curve
        .values
        .iter()
        .zip(&doubled.curve.values)
        .map(|(a, b)| if *a > 0.0 { (b - a).abs() / a } else if *b > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(BudgetDoubling {
        doubled_len: doubled.max_len,
        doubled: doubled.curve.values,
        base,
        max_relative_change,
    })
}
