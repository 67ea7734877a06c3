use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::{evaluate_phase, evaluate_phase_warm, PhaseQuery};
use super::wavefront::Sign;
use crate::billiard::Story;
use crate::error::Result;
use crate::fit::log_linear_fit;
use crate::geometry::Scene;
use crate::linalg::Vec3;

/// Sup over the sample points of finite-difference derivative sizes of `grad phi_J`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthEntry {
    pub story_len: usize,
    /// `sup |grad phi_J|`, identically 1.
    pub m0: f64,
    /// `sup |D_x grad phi_J|`.
    pub dx1: f64,
    /// `sup |D_x^2 grad phi_J|` (pure second differences).
    pub dx2: f64,
    /// `sup |D_xi grad phi_J|` (unit-sphere directions).
    pub dxi1: f64,
    /// `sup |D_xi D_x grad phi_J|`.
    pub dxi1_dx1: f64,
    /// Columns whose value is within 100x of the finite-difference noise floor.
    pub unreliable: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthReport {
    pub entries: Vec<GrowthEntry>,
    /// Fitted slope of `log(value)` against `|J|` per column.
    pub slope_dx1: f64,
    pub slope_dx2: f64,
    pub slope_dxi1: f64,
    pub slope_dxi1_dx1: f64,
    pub samples: usize,
    /// Smallest story length for which every sample point was in the phase domain.
    pub smallest_defined_len: Option<usize>,
}

const HX: f64 = 1e-4;
const HX2: f64 = 1e-3;
const HXI: f64 = 1e-4;
/// Assumed absolute accuracy of a phase gradient.
const GRAD_NOISE: f64 = 1e-14;

fn grad_at(scene: &Scene<f64>, base: &PhaseQuery<f64>, x: Vec3<f64>, xi: Vec3<f64>, warm: &[Vec3<f64>]) -> Result<Vec3<f64>> {
    let mut q = base.clone();
    q.x = x;
    q.xi = xi;
    Ok(evaluate_phase_warm(scene, &q, Some(warm))?.sample.grad)
}

fn sample_points(scene: &Scene<f64>, count: usize) -> Vec<Vec3<f64>> {
    let u = scene.u_infinity();
    let g = scene.gap();
    let r = scene.cylinder_radius;
    (0..count)
        .map(|i| {
            let f = (i as f64 + 0.5) / count as f64;
            let ang = 2.4 * i as f64;
            u.point(g * (0.3 + 0.4 * f), 0.4 * r * f * ang.cos(), 0.4 * r * f * ang.sin())
        })
        .collect()
}

/// FD estimates of derivatives of `grad phi_J` for the alternating stories
/// compatible with the plane wave along `xi`, lengths `1..=max_len`.
pub fn derivative_growth_certificate(
    scene: &Scene<f64>,
    max_len: usize,
    y: Vec3<f64>,
    xi: Vec3<f64>,
    samples: usize,
) -> Result<GrowthReport> {
    let first = if xi.dot(scene.axis_e) > 0.0 { 2 } else { 1 };
    let pts = sample_points(scene, samples);
    let (e1, e2) = xi.normalize().orthonormal_pair();
    let xi_hat = xi.normalize();

    let rows: Vec<Option<GrowthEntry>> = (1..=max_len)
        .into_par_iter()
        .map(|len| {
            let story = Story::alternating(first, len);
            let mut acc = [0.0f64; 5];
            for &x in &pts {
                let base = PhaseQuery::new(x, xi_hat, story.clone(), y, Sign::Plus);
                let sol = evaluate_phase(scene, &base).ok()?;
                let warm = sol.reflection_points().to_vec();
                let g = |x: Vec3<f64>, xi: Vec3<f64>| grad_at(scene, &base, x, xi, &warm).ok();
                let g0 = sol.sample.grad;
                acc[0] = acc[0].max(g0.norm());
                let axes = [Vec3::unit_x(), Vec3::unit_y(), Vec3::unit_z()];
                let mut d1 = 0.0f64;
                let mut d2 = 0.0f64;
                for &a in &axes {
                    let (p, m) = (g(x + a * HX, xi_hat)?, g(x - a * HX, xi_hat)?);
                    d1 += ((p - m) / (2.0 * HX)).norm_sq();
                    let (p2, m2) = (g(x + a * HX2, xi_hat)?, g(x - a * HX2, xi_hat)?);
                    d2 = d2.max(((p2 - g0 * 2.0 + m2) / (HX2 * HX2)).norm());
                }
                acc[1] = acc[1].max(d1.sqrt());
                acc[2] = acc[2].max(d2);
                let mut dxi = 0.0f64;
                let mut mixed = 0.0f64;
                for &e in &[e1, e2] {
                    let xp = (xi_hat + e * HXI).normalize();
                    let xm = (xi_hat - e * HXI).normalize();
                    dxi += ((g(x, xp)? - g(x, xm)?) / (2.0 * HXI)).norm_sq();
                    for &a in &axes {
                        let v = (g(x + a * HX2, xp)? - g(x + a * HX2, xm)? - g(x - a * HX2, xp)?
                            + g(x - a * HX2, xm)?)
                            / (4.0 * HX2 * HXI);
                        mixed = mixed.max(v.norm());
                    }
                }
                acc[3] = acc[3].max(dxi.sqrt());
                acc[4] = acc[4].max(mixed);
            }
            let floors = [
                ("dx1", acc[1], GRAD_NOISE / HX),
                ("dx2", acc[2], GRAD_NOISE / (HX2 * HX2)),
                ("dxi1", acc[3], GRAD_NOISE / HXI),
                ("dxi1_dx1", acc[4], GRAD_NOISE / (HX2 * HXI)),
            ];
            let unreliable = floors
                .iter()
                .filter(|(_, v, floor)| *v < 100.0 * floor)
                .map(|(n, _, _)| n.to_string())
                .collect();
            Some(GrowthEntry {
                story_len: len,
                m0: acc[0],
                dx1: acc[1],
                dx2: acc[2],
                dxi1: acc[3],
                dxi1_dx1: acc[4],
                unreliable,
            })
        })
        .collect();

    let smallest_defined_len = rows.iter().position(Option::is_some).map(|i| i + 1);
    let entries: Vec<GrowthEntry> = rows.into_iter().flatten().collect();
    let lens: Vec<f64> = entries.iter().map(|e| e.story_len as f64).collect();
    let slope = |f: &dyn Fn(&GrowthEntry) -> f64| {
        let ys: Vec<f64> = entries.iter().map(f).collect();
        log_linear_fit(&lens, &ys).map_or(f64::NAN, |fit| fit.slope)
    };
    Ok(GrowthReport {
        slope_dx1: slope(&|e| e.dx1),
        slope_dx2: slope(&|e| e.dx2),
        slope_dxi1: slope(&|e| e.dxi1),
        slope_dxi1_dx1: slope(&|e| e.dxi1_dx1),
        entries,
        samples,
        smallest_defined_len,
    })
}
