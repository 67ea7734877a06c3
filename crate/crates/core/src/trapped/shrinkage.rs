use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::phase_space_exit;
use crate::billiard::Section;
use crate::error::{Error, Result};
use crate::fit::log_linear_fit;
use crate::geometry::{Cylinder, Scene};

/// Exit times on the `(q1, p1)` slice through the midpoint section:
/// position `mid + q1 u1`, direction with transverse component `p1 u1`.
#[derive(Clone, Debug)]
pub struct SliceTable {
    pub n: usize,
    pub half_width: f64,
    pub spacing: f64,
    pub t_max: f64,
    /// Row-major over `(q1, p1)`.
    pub tau: Vec<f64>,
}

impl SliceTable {
    pub fn compute(scene: &Scene<f64>, region: &Cylinder<f64>, n: usize, t_max: f64) -> Self {
        let sec = Section::of(scene);
        let half_width = region.radius;
        let spacing = 2.0 * half_width / (n - 1) as f64;
        let tau = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let q = -half_width + spacing * (idx / n) as f64;
                let p = -half_width + spacing * (idx % n) as f64;
                let (x, d) = sec.state([q, 0.0, p, 0.0]);
                phase_space_exit(scene, x, d, region, t_max)
            })
            .collect();
        Self {
            n,
            half_width,
            spacing,
            t_max,
            tau,
        }
    }

    /// `d(T_{t - t_star}^c, T_t)` in the max metric, in cells. `None` when
    /// either set is empty on the grid.
    pub fn distance_cells(&self, t: f64, t_star: f64) -> Option<usize> {
        let outside: Vec<bool> = self.tau.iter().map(|&v| v < t - t_star).collect();
        if !outside.iter().any(|&b| b) {
            return None;
        }
        let dist = chessboard_distance(&outside, self.n);
        self.tau
            .iter()
            .zip(&dist)
            .filter(|(&v, _)| v >= t)
            .map(|(_, &d)| d)
            .min()
    }
}

/// Exact chessboard distance (in cells) to the nearest `true` cell.
pub fn chessboard_distance(target: &[bool], n: usize) -> Vec<usize> {
    let inf = usize::MAX / 2;
    let mut d: Vec<usize> = target.iter().map(|&t| if t { 0 } else { inf }).collect();
    for i in 0..n {
        for j in 0..n {
            let mut best = d[i * n + j];
            if i > 0 {
                best = best.min(d[(i - 1) * n + j] + 1);
                if j > 0 {
                    best = best.min(d[(i - 1) * n + j - 1] + 1);
                }
                if j + 1 < n {
                    best = best.min(d[(i - 1) * n + j + 1] + 1);
                }
            }
            if j > 0 {
                best = best.min(d[i * n + j - 1] + 1);
            }
            d[i * n + j] = best;
        }
    }
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let mut best = d[i * n + j];
            if i + 1 < n {
                best = best.min(d[(i + 1) * n + j] + 1);
                if j > 0 {
                    best = best.min(d[(i + 1) * n + j - 1] + 1);
                }
                if j + 1 < n {
                    best = best.min(d[(i + 1) * n + j + 1] + 1);
                }
            }
            if j + 1 < n {
                best = best.min(d[i * n + j + 1] + 1);
            }
            d[i * n + j] = best;
        }
    }
    d
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkagePoint {
    pub t: f64,
    pub distance: f64,
    pub cells: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShrinkageFit {
    pub c_est: f64,
    pub t_star: f64,
    pub r2: f64,
    pub resolution: usize,
    pub spacing: f64,
    pub points: Vec<ShrinkagePoint>,
}

/// Candidate shifts for the existential `T*`; the best linear fit wins.
pub const T_STAR_CANDIDATES: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

/// Distances closer than this many cells are treated as the grid floor.
const FLOOR_CELLS: usize = 2;

/// Fits `log d(T_{T-T*}^c, T_T) = a - c T` on a `resolution^2` slice grid.
pub fn shrinkage_fit(scene: &Scene<f64>, region: &Cylinder<f64>, t_list: &[f64], resolution: usize) -> Result<ShrinkageFit> {
    if t_list.len() < 4 {
        return Err(Error::InvalidInput("shrinkage fit needs at least 4 values of T".into()));
    }
    let t_max = t_list.iter().cloned().fold(0.0, f64::max);
    let table = SliceTable::compute(scene, region, resolution, t_max);
    shrinkage_fit_table(&table, t_list)
}

pub fn shrinkage_fit_table(table: &SliceTable, t_list: &[f64]) -> Result<ShrinkageFit> {
    let mut best: Option<ShrinkageFit> = None;
    let mut any_above_floor = false;
    for &t_star in &T_STAR_CANDIDATES {
        let points: Vec<ShrinkagePoint> = t_list
            .iter()
            .filter(|&&t| t >= t_star)
            .filter_map(|&t| {
                let cells = table.distance_cells(t, t_star)?;
                Some(ShrinkagePoint {
                    t,
                    distance: cells as f64 * table.spacing,
                    cells,
                })
            })
            .collect();
        if points.iter().any(|p| p.cells > FLOOR_CELLS) {
            any_above_floor = true;
        }
        if points.len() < 4 || points.iter().any(|p| p.cells <= FLOOR_CELLS) {
            continue;
        }
        let ts: Vec<f64> = points.iter().map(|p| p.t).collect();
        let ds: Vec<f64> = points.iter().map(|p| p.distance).collect();
        let Some(fit) = log_linear_fit(&ts, &ds) else { continue };
        if best.as_ref().map_or(true, |b| fit.r2 > b.r2) {
            best = Some(ShrinkageFit {
                c_est: -fit.slope,
                t_star,
                r2: fit.r2,
                resolution: table.n,
                spacing: table.spacing,
                points,
            });
        }
    }
    best.ok_or_else(|| {
        if any_above_floor {
            Error::Resolution("no T* gives four distances above the grid floor; increase resolution".into())
        } else {
            Error::Resolution("all distances at the grid floor; increase resolution".into())
        }
    })
}
