use std::io::{self, Read, Write};

use bitvec::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::billiard::{exit_time, flow, PhasePoint};
use crate::error::{Error, Result};
use crate::geometry::{fibonacci_sphere, Cylinder, Scene};
use crate::linalg::Vec3;

/// Grid sizes: axial nodes, transverse nodes per axis (odd, so the axis is a
/// node), and directions (`e`, `-e`, then antipodal pairs).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub n_axial: usize,
    pub n_transverse: usize,
    pub n_directions: usize,
}

impl GridSpec {
    pub fn new(n_axial: usize, n_transverse: usize, n_directions: usize) -> Result<Self> {
        if n_axial < 2 || n_transverse < 3 || n_transverse % 2 == 0 || n_directions < 2 || n_directions % 2 == 1 {
            return Err(Error::InvalidInput(
                "need n_axial >= 2, odd n_transverse >= 3 and even n_directions >= 2".into(),
            ));
        }
        Ok(Self {
            n_axial,
            n_transverse,
            n_directions,
        })
    }

    pub fn cells(&self) -> usize {
        self.n_axial * self.n_transverse * self.n_transverse * self.n_directions
    }
}

/// Node layout of a phase-space grid over a cylinder.
#[derive(Clone, Debug)]
pub struct GridLayout {
    pub region: Cylinder<f64>,
    pub spec: GridSpec,
    pub axial_start: f64,
    pub axial_step: f64,
    pub transverse_step: f64,
    pub directions: Vec<Vec3<f64>>,
}

impl GridLayout {
    pub fn new(region: Cylinder<f64>, spec: GridSpec) -> Self {
        let len = region.gap + 2.0 * region.margin;
        let axial_step = len / (spec.n_axial - 1) as f64;
        let transverse_step = 2.0 * region.radius / (spec.n_transverse - 1) as f64;
        let e = region.axis;
        let mut directions = vec![e, -e];
        let pairs = spec.n_directions / 2 - 1;
        for d in fibonacci_sphere::<f64>(pairs) {
            directions.push(d);
            directions.push(-d);
        }
        Self {
            region,
            spec,
            axial_start: -region.margin,
            axial_step,
            transverse_step,
            directions,
        }
    }

    pub fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        let n = self.spec.n_transverse;
        ((i * n + j) * n + k) * self.spec.n_directions + l
    }

    pub fn unindex(&self, idx: usize) -> (usize, usize, usize, usize) {
        let n = self.spec.n_transverse;
        let nd = self.spec.n_directions;
        let l = idx % nd;
        let r = idx / nd;
        (r / (n * n), (r / n) % n, r % n, l)
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3<f64> {
        let half = (self.spec.n_transverse / 2) as f64;
        self.region.point(
            self.axial_start + self.axial_step * i as f64,
            (j as f64 - half) * self.transverse_step,
            (k as f64 - half) * self.transverse_step,
        )
    }

    /// Largest direction-grid spacing, estimated from the pair count.
    pub fn angular_step(&self) -> f64 {
        (4.0 * std::f64::consts::PI / self.spec.n_directions as f64).sqrt()
    }
}

/// Forward exit times of every grid node from the region, capped at `t_max`.
/// Membership for any `T <= t_max` follows without re-flowing, which makes
/// the nesting in `T` exact.
#[derive(Clone, Debug)]
pub struct ExitTable {
    pub layout: GridLayout,
    pub t_max: f64,
    /// `max(forward, backward)` exit time; 0 outside the region.
    pub tau: Vec<f64>,
}

impl ExitTable {
    pub fn compute(scene: &Scene<f64>, region: Cylinder<f64>, spec: GridSpec, t_max: f64) -> Self {
        let layout = GridLayout::new(region, spec);
        let tau = (0..spec.cells())
            .into_par_iter()
            .map(|idx| {
                let (i, j, k, l) = layout.unindex(idx);
                let x = layout.position(i, j, k);
                if !region.contains(x) || !scene.outside_bodies(x) {
                    return 0.0;
                }
                let d = layout.directions[l];
                phase_space_exit(scene, x, d, &region, t_max)
            })
            .collect();
        Self { layout, t_max, tau }
    }

    pub fn membership(&self, t: f64) -> Result<TrappedSetGrid> {
        if t > self.t_max || t < 0.0 {
            return Err(Error::InvalidInput(format!("T = {t} outside [0, {}]", self.t_max)));
        }
        let mut bits = bitvec![u8, Lsb0; 0; self.tau.len()];
        for (idx, &tau) in self.tau.iter().enumerate() {
            let (i, j, k, _) = self.layout.unindex(idx);
            if self.layout.region.contains(self.layout.position(i, j, k)) && tau >= t {
                bits.set(idx, true);
            }
        }
        Ok(TrappedSetGrid {
            layout: self.layout.clone(),
            t,
            membership: bits,
            warning: None,
        })
    }
}

/// `max` of the forward exit times of `(x, d)` and `(x, -d)`.
pub fn phase_space_exit(scene: &Scene<f64>, x: Vec3<f64>, d: Vec3<f64>, region: &Cylinder<f64>, t_max: f64) -> f64 {
    let fwd = exit_time(scene, PhasePoint::new(x, d), region, t_max);
    if fwd >= t_max {
        return fwd;
    }
    fwd.max(exit_time(scene, PhasePoint::new(x, -d), region, t_max))
}

/// Grid approximation of the trapped set `T_T(D)`.
#[derive(Clone, Debug)]
pub struct TrappedSetGrid {
    pub layout: GridLayout,
    pub t: f64,
    pub membership: BitVec<u8, Lsb0>,
    /// Set when the grid spacing exceeds the `e^{-cT}` scale.
    pub warning: Option<String>,
}

impl TrappedSetGrid {
    pub fn is_member(&self, i: usize, j: usize, k: usize, l: usize) -> bool {
        self.membership[self.layout.index(i, j, k, l)]
    }

    pub fn count(&self) -> usize {
        self.membership.count_ones()
    }

    /// Every member of `other` is a member of `self`.
    pub fn contains_all(&self, other: &TrappedSetGrid) -> bool {
        self.membership.len() == other.membership.len()
            && other.membership.iter_ones().all(|i| self.membership[i])
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        let l = &self.layout;
        w.write_all(MAGIC)?;
        for v in [1u32, l.spec.n_axial as u32, l.spec.n_transverse as u32, l.spec.n_directions as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [self.t, l.axial_start, l.axial_step, l.transverse_step, l.region.radius] {
            w.write_all(&v.to_le_bytes())?;
        }
        for d in &l.directions {
            for c in d.to_f64() {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        w.write_all(self.membership.as_raw_slice())
    }
}

const MAGIC: &[u8; 4] = b"RTTS";

/// Contents of a membership file.
#[derive(Clone, Debug, PartialEq)]
pub struct MembershipFile {
    pub spec: GridSpec,
    pub t: f64,
    pub axial_start: f64,
    pub axial_step: f64,
    pub transverse_step: f64,
    pub radius: f64,
    pub directions: Vec<[f64; 3]>,
    pub membership: BitVec<u8, Lsb0>,
}

/// Reads the binary membership format.
///
/// Layout (little endian): `b"RTTS"`, `u32` version = 1, `u32` axial,
/// transverse and direction counts, `f64` T, axial start, axial step,
/// transverse step, radius, then `3 * n_dir` `f64` direction components,
/// then the membership bits packed LSB first in index order
/// `((axial * n_t + t1) * n_t + t2) * n_dir + direction`.
pub fn read_membership<R: Read>(mut r: R) -> Result<MembershipFile> {
    let bad = |m: &str| Error::InvalidInput(format!("membership file: {m}"));
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut u = [0u32; 4];
    for v in u.iter_mut() {
        let mut b = [0u8; 4];
        r.read_exact(&mut b).map_err(|_| bad("truncated header"))?;
        *v = u32::from_le_bytes(b);
    }
    if u[0] != 1 {
        return Err(bad("unsupported version"));
    }
    let spec = GridSpec::new(u[1] as usize, u[2] as usize, u[3] as usize)?;
    let mut read_f64 = || -> Result<f64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(|_| bad("truncated body"))?;
        Ok(f64::from_le_bytes(b))
    };
    let t = read_f64()?;
    let axial_start = read_f64()?;
    let axial_step = read_f64()?;
    let transverse_step = read_f64()?;
    let radius = read_f64()?;
    let mut directions = Vec::with_capacity(spec.n_directions);
    for _ in 0..spec.n_directions {
        directions.push([read_f64()?, read_f64()?, read_f64()?]);
    }
    let mut raw = vec![0u8; spec.cells().div_ceil(8)];
    r.read_exact(&mut raw).map_err(|_| bad("truncated membership bits"))?;
    let mut membership = BitVec::<u8, Lsb0>::from_vec(raw);
    membership.truncate(spec.cells());
    Ok(MembershipFile {
        spec,
        t,
        axial_start,
        axial_step,
        transverse_step,
        radius,
        directions,
        membership,
    })
}

/// Trapped set of `region` in time `t`. With a known hyperbolic `rate`, a
/// grid coarser than `e^{-rate t}` carries an under-resolution warning.
pub fn compute_trapped_set(
    scene: &Scene<f64>,
    region: Cylinder<f64>,
    t: f64,
    spec: GridSpec,
    rate: Option<f64>,
) -> Result<TrappedSetGrid> {
    if !region.contains((scene.trapped.a1 + scene.trapped.a2) * 0.5) {
        return Err(Error::InvalidInput("region must contain the trapped ray".into()));
    }
    let table = ExitTable::compute(scene, region, spec, t);
    let mut grid = table.membership(t)?;
    if let Some(c) = rate {
        let scale = (-c * t).exp();
        let l = &grid.layout;
        let coarsest = l.axial_step.max(l.transverse_step).max(l.angular_step());
        if coarsest > scale {
            grid.warning = Some(format!(
                "under-resolved: grid spacing {coarsest:.3e} exceeds e^(-cT) = {scale:.3e}"
            ));
        }
    }
    Ok(grid)
}

/// Sampled check that `gamma(t)` lies inside `T_T(D)` with a positive margin
/// for `t` in `[-T-1, -T]`, over starts whose backward ray stays in `D` for
/// time `T + 1`.
#[derive(Clone, Debug)]
pub struct DistbicReport {
    pub starts: usize,
    pub checks: usize,
    /// Smallest phase-space radius around `gamma(t)` that kept every probe a member.
    pub min_margin: f64,
    pub failures: usize,
}

pub fn check_distbic(scene: &Scene<f64>, region: Cylinder<f64>, t: f64, starts: usize, seed: u64) -> DistbicReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = DistbicReport {
        starts: 0,
        checks: 0,
        min_margin: f64::INFINITY,
        failures: 0,
    };
    let (u1, u2) = region.axis.orthonormal_pair();
    let mid = region.point(region.gap * 0.5, 0.0, 0.0);
    let mut attempts = 0;
    while report.starts < starts && attempts < starts * 1000 {
        attempts += 1;
        let w = 1e-3;
        let x = mid + u1 * rng.gen_range(-w..w) + u2 * rng.gen_range(-w..w);
        let sgn = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let d = (region.axis * sgn + u1 * rng.gen_range(-w..w) + u2 * rng.gen_range(-w..w)).normalize();
        if exit_time(scene, PhasePoint::new(x, -d), &region, t + 1.0) < t + 1.0 {
            continue;
        }
        report.starts += 1;
        for m in 0..=4 {
            let s = t + m as f64 * 0.25;
            let Ok(back) = flow(scene, PhasePoint::new(x, -d), s) else { continue };
            let state = back.final_state.reversed();
            report.checks += 1;
            let mut margin = 0.0;
            let mut r = 1e-2;
            while r > 1e-9 {
                let all = (0..8).all(|_| {
                    let dx = Vec3::new(rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-r..r));
                    let dd = Vec3::new(rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-r..r));
                    let p = state.x + dx;
                    scene.outside_bodies(p)
                        && region.contains(p)
                        && phase_space_exit(scene, p, (state.xi + dd).normalize(), &region, t) >= t
                });
                if all {
                    margin = r;
                    break;
                }
                r *= 0.5;
            }
            if margin > 0.0 {
                report.min_margin = report.min_margin.min(margin);
            } else {
                report.failures += 1;
            }
        }
    }
    report
}
