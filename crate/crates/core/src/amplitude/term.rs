use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use super::trace::{outside_domain, TracedPhase};
use crate::billiard::Story;
use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::linalg::Vec3;
use crate::phase::Sign;
use crate::trapped::CutoffSymbol;

/// A symbol `q(x, xi)` that the amplitudes transport.
pub trait Symbol: Sync {
    fn eval(&self, x: Vec3<f64>, xi: Vec3<f64>) -> f64;
}

impl Symbol for CutoffSymbol {
    fn eval(&self, x: Vec3<f64>, xi: Vec3<f64>) -> f64 {
        CutoffSymbol::eval(self, x, xi)
    }
}

impl<F: Fn(Vec3<f64>, Vec3<f64>) -> f64 + Sync> Symbol for F {
    fn eval(&self, x: Vec3<f64>, xi: Vec3<f64>) -> f64 {
        self(x, xi)
    }
}

/// Which term: story, wave sign and transport order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub story: Story,
    pub sign: Sign,
    pub k: usize,
}

impl TermSpec {
    pub fn new(story: Story, sign: Sign, k: usize) -> Self {
        Self { story, sign, k }
    }
}

/// Settings shared by all terms of one evaluation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AmplitudeConfig {
    /// Source point `y` of the phases.
    pub y: Vec3<f64>,
    pub h: f64,
    pub k_max: usize,
    /// Finite-difference step of the d'Alembertian, in units of `h`.
    pub fd_factor: f64,
    /// Length of one Gauss-Legendre panel in the time quadrature.
    pub panel: f64,
    pub nodes: usize,
}

/// Steps below this make the second differences round-off dominated.
pub const FD_FLOOR: f64 = 1e-4;

impl AmplitudeConfig {
    pub fn new(y: Vec3<f64>, h: f64) -> Self {
        Self {
            y,
            h,
            k_max: 1,
            fd_factor: 0.1,
            panel: 0.25,
            nodes: 8,
        }
    }

    pub fn fd_step(&self) -> Result<f64> {
        let d = self.fd_factor * self.h;
        if !(d >= FD_FLOOR) {
            return Err(Error::Resolution(format!(
                "d'Alembertian step {d:.2e} is below the floor {FD_FLOOR:.0e}; raise h or fd_factor"
            )));
        }
        Ok(d)
    }
}

/// `w_k^{J,±}(x, t)` for the frequency `xi`.
///
/// `k = 0`: `(1/2) Lambda phi_J(x, xi) q(X^_{-t}(x, grad phi_J), xi)` once
/// `t >= l_J(x)`, zero before; the factor 1/2 is the initial splitting into
/// the two waves and is inherited by every reflection.
///
/// `k >= 1`: `-(1/2) int_0^t g(x, t - s) box w_{k-1}^{J(x, t - s)}(X^_{-(t-s)}, s) ds`,
/// the solution of `(2 d_t + 2 grad phi . grad + Delta phi) w_k = -box w_{k-1}`
/// with zero data, by composite Gauss-Legendre quadrature and a centered
/// second-difference `box = d_t^2 - Delta`.
pub fn amplitude_eval(
    scene: &Scene<f64>,
    term: &TermSpec,
    x: Vec3<f64>,
    t: f64,
    xi: Vec3<f64>,
    q: &dyn Symbol,
    cfg: &AmplitudeConfig,
) -> Result<f64> {
    if term.k > cfg.k_max {
        return Err(Error::InvalidInput(format!("order {} exceeds k_max = {}", term.k, cfg.k_max)));
    }
    if term.k > 0 {
        cfg.fd_step()?;
    }
    Ok(eval_rec(scene, &term.story, term.sign, term.k, x, t, xi, q, cfg, None)?.unwrap_or(0.0))
}

/// `None` when `x` is outside the domain of `phi_J`.
#[allow(clippy::too_many_arguments)]
fn eval_rec(
    scene: &Scene<f64>,
    story: &Story,
    sign: Sign,
    k: usize,
    x: Vec3<f64>,
    t: f64,
    xi: Vec3<f64>,
    q: &dyn Symbol,
    cfg: &AmplitudeConfig,
    warm: Option<&[Vec3<f64>]>,
) -> Result<Option<f64>> {
    let traced = match TracedPhase::solve(scene, x, xi, story, cfg.y, sign, warm) {
        Ok(p) => p,
        Err(e) if outside_domain(&e) => return Ok(None),
        Err(e) => return Err(e),
    };
    if k == 0 {
        // Reflected terms start from zero data: nothing arrives before the
        // backward characteristic has undone every reflection. The free term
        // is smooth across t = 0, which the time differences rely on.
        if !story.is_empty() && t < traced.l_j() {
            return Ok(Some(0.0));
        }
        return Ok(Some(0.5 * traced.lambda * q.eval(traced.backward_point(t), xi)));
    }
    if t <= 0.0 {
        return Ok(Some(0.0));
    }
    let delta = cfg.fd_step()?;
    let rule = GaussLegendre::new(cfg.nodes).map_err(|e| Error::InvalidInput(e.to_string()))?;
    // The sub-story changes at each reflection; integrate piecewise.
    let mut cuts = vec![0.0];
    let mut back = 0.0;
    for leg in traced.legs.iter().rev() {
        back += leg;
        if back < t {
            cuts.push(t - back);
        }
    }
    cuts.push(t);
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let panels = ((hi - lo) / cfg.panel).ceil().max(1.0) as usize;
        let width = (hi - lo) / panels as f64;
        for p in 0..panels {
            let (a, b) = (lo + p as f64 * width, lo + (p + 1) as f64 * width);
            let mut err = None;
            let v = rule.integrate(a, b, |s| {
                let tau = t - s;
                let z = traced.backward_point(tau);
                let sub = traced.remaining_story(tau);
                let pts = traced.remaining_points(tau);
                let warm = (!pts.is_empty()).then_some(pts);
                let f = |dz: Vec3<f64>, ds: f64| eval_rec(scene, &sub, sign, k - 1, z + dz, s + ds, xi, q, cfg, warm);
                match boxed(&f, delta) {
                    Ok(b) => traced.partial_product(tau) * b,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            total += v;
        }
    }
    Ok(Some(-0.5 * total))
}

type Probe<'a> = dyn Fn(Vec3<f64>, f64) -> Result<Option<f64>> + 'a;

/// `d_t^2 - Delta` by second differences. Near a boundary, where one side of
/// the stencil leaves the domain of the phase, the spatial difference is
/// taken one-sided (second order) from the other side.
fn boxed(f: &Probe<'_>, delta: f64) -> Result<f64> {
    let Some(c) = f(Vec3::zero(), 0.0)? else {
        return Ok(0.0);
    };
    let mut lap = 0.0;
    for axis in [Vec3::unit_x(), Vec3::unit_y(), Vec3::unit_z()] {
        let plus = f(axis * delta, 0.0)?;
        let minus = f(axis * -delta, 0.0)?;
        lap += match (plus, minus) {
            (Some(p), Some(m)) => p + m - 2.0 * c,
            _ => {
                let dir = if plus.is_some() { 1.0 } else { -1.0 };
                let side = |n: f64| f(axis * (dir * n * delta), 0.0);
                match (side(1.0)?, side(2.0)?, side(3.0)?) {
                    (Some(a), Some(b), Some(d)) => 2.0 * c - 5.0 * a + 4.0 * b - d,
                    _ => return Err(Error::Resolution("d'Alembertian stencil does not fit in the phase domain".into())),
                }
            }
        };
    }
    let (Some(p), Some(m)) = (f(Vec3::zero(), delta)?, f(Vec3::zero(), -delta)?) else {
        return Err(Error::Inconsistent("time shift left the phase domain".into()));
    };
    Ok((p + m - 2.0 * c - lap) / (delta * delta))
}
