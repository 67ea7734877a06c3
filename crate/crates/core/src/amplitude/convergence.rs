use serde::{Deserialize, Serialize};

use super::product::curvature_product_warm;
use crate::billiard::{contracting_product, Story};
use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::geometry::Scene;
use crate::linalg::Vec3;
use crate::phase::Sign;
use crate::real::Real;

/// `J = (I, .., I, l)` with `I` one period and `l` empty or one reflection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    /// First reflection of `I`.
    pub first: u8,
    pub tail: bool,
    pub sign: Sign,
}

impl Pattern {
    /// The four patterns met by waves with `xi·e > 0`: the `+` wave starts on
    /// body 2, the `-` wave on body 1, and `l` must differ from the last
    /// reflection of `I`.
    pub fn all() -> [Pattern; 4] {
        [
            Pattern { first: 2, tail: false, sign: Sign::Plus },
            Pattern { first: 2, tail: true, sign: Sign::Plus },
            Pattern { first: 1, tail: false, sign: Sign::Minus },
            Pattern { first: 1, tail: true, sign: Sign::Minus },
        ]
    }

    pub fn story(&self, r: usize) -> Story {
        Story::alternating(self.first, 2 * r + usize::from(self.tail))
    }

    pub fn label(&self) -> String {
        let i = if self.first == 1 { "(1,2)" } else { "(2,1)" };
        let l = if self.tail { format!("{{{}}}", self.first) } else { "{}".into() };
        format!("I={i} l={l} {}", self.sign.symbol())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub r: usize,
    pub story_len: usize,
    /// Mean of `Lambda phi_J / lambda^r` over the samples.
    pub mean_ratio: f64,
    /// `sup_x |ratio_r - ratio_{r-1}| / ratio_r`; undefined at `r = 1`.
    pub sup_increment: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatternReport {
    pub pattern: Pattern,
    pub label: String,
    pub rows: Vec<ConvergenceRow>,
    /// Limit estimate `a_{I,l}(x)` per sample (ratio at `r_max`).
    pub a_est: Vec<f64>,
    pub a_est_mean: f64,
    /// Fit of `ln(sup increment)` against `|J|` over `r >= r_fit_min`.
    pub fit: Option<LinearFit>,
    /// `exp(slope)`: geometric rate per reflection.
    pub alpha: Option<f64>,
    /// Set when the fit is not geometric (`R^2 < 0.8`).
    pub flagged: bool,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub lambda: f64,
    pub r_max: usize,
    pub r_fit_min: usize,
    pub samples: Vec<[f64; 3]>,
    pub xi: [f64; 3],
    pub patterns: Vec<PatternReport>,
}

impl ConvergenceReport {
    pub fn pattern(&self, p: Pattern) -> Option<&PatternReport> {
        self.patterns.iter().find(|r| r.pattern == p)
    }
}

/// Sample points in `U_inf`: `(axial fraction, transverse offsets in radii)`.
pub const CONVERGENCE_SAMPLES: [[f64; 3]; 5] = [
    [0.37, 0.10, -0.05],
    [0.50, 0.00, 0.00],
    [0.63, -0.08, 0.06],
    [0.45, 0.12, 0.10],
    [0.55, -0.10, -0.12],
];

/// Frequency direction: `e` tilted by these amounts along the section frame.
pub const CONVERGENCE_TILT: [f64; 2] = [0.05, 0.02];

pub fn convergence_check<T: Real>(scene: &Scene<T>, r_max: usize) -> Result<ConvergenceReport> {
    convergence_check_with(scene, r_max, 4, &CONVERGENCE_SAMPLES)
}

/// `Lambda phi_J / lambda^r` for `J = (I^r, l)` over the samples, with the
/// successive relative increments as the deviation measure and a
/// log-linear fit of their decay in `|J|`.
pub fn convergence_check_with<T: Real>(
    scene: &Scene<T>,
    r_max: usize,
    r_fit_min: usize,
    samples: &[[f64; 3]],
) -> Result<ConvergenceReport> {
    if r_max < 6 {
        return Err(Error::InvalidInput(format!("r_max = {r_max} < 6")));
    }
    if samples.is_empty() || r_fit_min < 2 || r_fit_min + 2 > r_max {
        return Err(Error::InvalidInput("need samples and 2 <= r_fit_min <= r_max - 2".into()));
    }
    let lambda = contracting_product(scene, scene.gap() * T::lit(1e-4), 4)?;
    let u = scene.u_infinity();
    let gap = scene.gap();
    let xs: Vec<Vec3<T>> = samples
        .iter()
        .map(|s| u.point(gap * T::lit(s[0]), u.radius * T::lit(s[1]), u.radius * T::lit(s[2])))
        .collect();
    let (u1, u2) = scene.axis_e.orthonormal_pair();
    let xi = (scene.axis_e + u1 * T::lit(CONVERGENCE_TILT[0]) + u2 * T::lit(CONVERGENCE_TILT[1])).normalize();
    let y = scene.midpoint();

    let mut patterns = Vec::new();
    for pattern in Pattern::all() {
        // ratios[s][r-1]
        let mut ratios: Vec<Vec<Option<T>>> = vec![vec![None; r_max]; xs.len()];
        let mut failures = 0;
        for (si, &x) in xs.iter().enumerate() {
            let mut warm: Option<Vec<Vec3<T>>> = None;
            for r in 1..=r_max {
                let story = pattern.story(r);
                // Warm start: the previous solution with one more period
                // prepended at the same points.
                let seed = warm.as_ref().map(|w| {
                    let mut v = w[..2.min(w.len())].to_vec();
                    v.extend_from_slice(w);
                    v.truncate(story.len());
                    v
                });
                let seed = seed.filter(|v| v.len() == story.len());
                match curvature_product_warm(scene, x, xi, &story, y, pattern.sign, seed.as_deref()) {
                    Ok((_, sol)) => {
                        let value = sol.leg_factors.iter().fold(T::one(), |a, &b| a * b);
                        ratios[si][r - 1] = Some(value / lambda.powi(r as i32));
                        warm = Some(sol.reflection_points().to_vec());
                    }
                    Err(_) => {
                        failures += 1;
                        warm = None;
                    }
                }
            }
        }
        let mut rows = Vec::with_capacity(r_max);
        for r in 1..=r_max {
            let vals: Vec<T> = ratios.iter().filter_map(|v| v[r - 1]).collect();
            let mean = if vals.is_empty() {
                f64::NAN
            } else {
                vals.iter().map(|v| v.to_f64_lossy()).sum::<f64>() / vals.len() as f64
            };
            let sup_increment = (r >= 2)
                .then(|| {
                    ratios
                        .iter()
                        .filter_map(|v| match (v[r - 2], v[r - 1]) {
                            (Some(a), Some(b)) => Some(((b - a) / b).abs().to_f64_lossy()),
                            _ => None,
                        })
                        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))))
                })
                .flatten();
            rows.push(ConvergenceRow {
                r,
                story_len: pattern.story(r).len(),
                mean_ratio: mean,
                sup_increment,
            });
        }
        let (fx, fy): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|row| row.r >= r_fit_min)
            .filter_map(|row| match row.sup_increment {
                Some(d) if d > 0.0 => Some((row.story_len as f64, d.ln())),
                _ => None,
            })
            .unzip();
        let fit = linear_fit(&fx, &fy);
        let a_est: Vec<f64> = ratios
            .iter()
            .filter_map(|v| v[r_max - 1].map(|a| a.to_f64_lossy()))
            .collect();
        let a_est_mean = a_est.iter().sum::<f64>() / a_est.len().max(1) as f64;
        patterns.push(PatternReport {
            pattern,
            label: pattern.label(),
            rows,
            a_est,
            a_est_mean,
            fit,
            alpha: fit.map(|f| f.slope.exp()),
            flagged: fit.map_or(true, |f| f.r2 < 0.8),
            failures,
        });
    }
    Ok(ConvergenceReport {
        lambda: lambda.to_f64_lossy(),
        r_max,
        r_fit_min,
        samples: samples.to_vec(),
        xi: xi.to_f64(),
        patterns,
    })
}
