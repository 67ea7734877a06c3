use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::term::{AmplitudeConfig, Symbol};
use super::trace::{outside_domain, TracedPhase};
use crate::billiard::Story;
use crate::error::{Error, Result};
use crate::fit::{linear_fit, log_linear_fit, LinearFit};
use crate::geometry::Scene;
use crate::linalg::Vec3;
use crate::phase::Sign;

/// Points of `supp chi_0`: inside `U_inf` away from its boundary collar and
/// outside both bodies.
pub fn chi0_samples(scene: &Scene<f64>, count: usize, collar: f64, seed: u64) -> Vec<Vec3<f64>> {
    let u = scene.u_infinity();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 1000 * count.max(1) {
        tries += 1;
        let s = rng.gen_range(0.0..u.gap);
        let r = u.radius * rng.gen_range(0.0f64..1.0).sqrt();
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        let p = u.point(s, r * a.cos(), r * a.sin());
        if u.nu(p) <= 1.0 - collar && scene.outside_bodies(p) {
            out.push(p);
        }
    }
    out
}

/// First body met by the wave moving along `dir`.
fn first_body(scene: &Scene<f64>, dir: Vec3<f64>) -> u8 {
    if dir.dot(scene.axis_e) > 0.0 {
        2
    } else {
        1
    }
}

/// The stories carried by each wave, up to `max_len` reflections, in
/// `(|J|, sign)` order.
fn stories(scene: &Scene<f64>, xi: Vec3<f64>, max_len: usize) -> Vec<(Story, Sign)> {
    let mut out = vec![(Story::empty(), Sign::Plus), (Story::empty(), Sign::Minus)];
    for n in 1..=max_len {
        for sign in [Sign::Plus, Sign::Minus] {
            out.push((Story::alternating(first_body(scene, sign.apply(xi)), n), sign));
        }
    }
    out
}

/// Traces every story at `x`, warm-starting each length from the previous.
fn trace_all(
    scene: &Scene<f64>,
    x: Vec3<f64>,
    xi: Vec3<f64>,
    y: Vec3<f64>,
    list: &[(Story, Sign)],
) -> Result<Vec<Option<TracedPhase>>> {
    let mut out = Vec::with_capacity(list.len());
    let mut last: [Option<Vec<Vec3<f64>>>; 2] = [None, None];
    for (story, sign) in list {
        let slot = usize::from(*sign == Sign::Minus);
        // One more reflection lands on the body of the second-to-last point.
        let warm = last[slot].as_ref().filter(|w| w.len() >= 2).map(|w| {
            let mut v = w.clone();
            v.push(w[w.len() - 2]);
            v
        });
        let warm = warm.filter(|v| v.len() == story.len());
        match TracedPhase::solve(scene, x, xi, story, y, *sign, warm.as_deref()) {
            Ok(p) => {
                last[slot] = Some(p.points.clone());
                out.push(Some(p));
            }
            Err(e) if outside_domain(&e) => {
                last[slot] = None;
                out.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// `w_0` from a traced phase, zero until every reflection is undone.
fn w0(traced: &TracedPhase, t: f64, q: &dyn Symbol) -> f64 {
    if t < traced.l_j() {
        return 0.0;
    }
    0.5 * traced.lambda * q.eval(traced.backward_point(t), traced.xi)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecaySeries {
    pub t: Vec<f64>,
    /// `sup_x sum_{J, ±} |w_0^{J,±}(x, t)|`.
    pub sup_sum: Vec<f64>,
    pub fit: Option<LinearFit>,
    /// `-slope` of the log-linear fit over `t >= fit_from`.
    pub rate: Option<f64>,
    pub fit_from: f64,
    pub max_len: usize,
    pub samples: usize,
    /// Story/point pairs outside the phase domain.
    pub outside: usize,
}

/// Decay of the summed leading amplitudes over `chi_0` samples.
#[allow(clippy::too_many_arguments)]
pub fn amplitude_decay(
    scene: &Scene<f64>,
    q: &dyn Symbol,
    cfg: &AmplitudeConfig,
    xi: Vec3<f64>,
    xs: &[Vec3<f64>],
    ts: &[f64],
    max_len: usize,
    fit_from: f64,
) -> Result<DecaySeries> {
    if xs.is_empty() || ts.is_empty() {
        return Err(Error::InvalidInput("decay needs sample points and times".into()));
    }
    let list = stories(scene, xi, max_len);
    let traced: Vec<Vec<Option<TracedPhase>>> = xs
        .par_iter()
        .map(|&x| trace_all(scene, x, xi, cfg.y, &list))
        .collect::<Result<_>>()?;
    let outside = traced.iter().flatten().filter(|p| p.is_none()).count();
    let sup_sum: Vec<f64> = ts
        .par_iter()
        .map(|&t| {
            traced
                .iter()
                .map(|per_x| per_x.iter().flatten().map(|p| w0(p, t, q).abs()).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .collect();
    let (ft, fv): (Vec<f64>, Vec<f64>) = ts
        .iter()
        .zip(&sup_sum)
        .filter(|(&t, _)| t >= fit_from)
        .map(|(&t, &v)| (t, v))
        .unzip();
    let fit = log_linear_fit(&ft, &fv);
    Ok(DecaySeries {
        t: ts.to_vec(),
        sup_sum,
        rate: fit.map(|f| -f.slope),
        fit,
        fit_from,
        max_len,
        samples: xs.len(),
        outside,
    })
}

/// Measured time support of one story.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StoryWindow {
    pub story: Vec<u8>,
    pub sign: Sign,
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StoryCensus {
    pub windows: Vec<StoryWindow>,
    /// `min t_min / |J|` over `|J| >= 1`.
    pub c1: f64,
    /// `max t_max / (|J| + 1)`.
    pub c2: f64,
    pub t: Vec<f64>,
    /// `#{J : c1 |J| <= t <= c2 (|J| + 1)}`.
    pub window_count: Vec<usize>,
    /// `#{J : c1 |J| <= t}`, before localization.
    pub cumulative_count: Vec<usize>,
    /// Stories whose measured window contains `t`; complete for `t <= complete_until`.
    pub direct_count: Vec<usize>,
    pub complete_until: f64,
    pub fit: Option<LinearFit>,
}

/// Distances `d` behind `start` along `-dir` with `q != 0`.
fn support_interval(q: &dyn Symbol, start: Vec3<f64>, dir: Vec3<f64>, xi: Vec3<f64>, reach: f64, step: f64) -> Option<(f64, f64)> {
    let n = (reach / step).ceil() as usize;
    let mut lo = None;
    let mut hi = None;
    for i in 0..=n {
        let d = i as f64 * step;
        if q.eval(start - dir * d, xi) != 0.0 {
            lo.get_or_insert(d);
            hi = Some(d);
        }
    }
    lo.zip(hi)
}

/// Counts of stories with nonvanishing `chi_0`-localized terms per time.
///
/// Windows are measured for `|J| <= measure_len` by scanning the support of
/// `q` along the incident line behind `P_1` (for `J` empty, behind `x`);
/// the counts use the window arithmetic with the measured `c1`, `c2` for
/// every length.
#[allow(clippy::too_many_arguments)]
pub fn story_census(
    scene: &Scene<f64>,
    q: &dyn Symbol,
    cfg: &AmplitudeConfig,
    xi: Vec3<f64>,
    xs: &[Vec3<f64>],
    t_max: f64,
    dt: f64,
    measure_len: usize,
) -> Result<StoryCensus> {
    let gap = scene.gap();
    if !(t_max > 0.0 && t_max <= 50.0 * gap) || !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("need 0 < t_max <= 50 bounce times ({})", 50.0 * gap)));
    }
    if xs.is_empty() || measure_len == 0 {
        return Err(Error::InvalidInput("census needs sample points and measure_len >= 1".into()));
    }
    let list = stories(scene, xi, measure_len);
    let reach = 2.0 * (gap + 2.0 * scene.cylinder_radius);
    let step = gap / 400.0;
    let per_x: Vec<Vec<Option<(f64, f64)>>> = xs
        .par_iter()
        .map(|&x| {
            let traced = trace_all(scene, x, xi, cfg.y, &list)?;
            Ok(traced
                .iter()
                .map(|p| {
                    let p = p.as_ref()?;
                    let start = p.points.first().copied().unwrap_or(p.x);
                    let (a, b) = support_interval(q, start, p.dir, xi, reach, step)?;
                    Some((p.l_j() + a, p.l_j() + b))
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut windows = Vec::new();
    for (i, (story, sign)) in list.iter().enumerate() {
        let ws: Vec<(f64, f64)> = per_x.iter().filter_map(|v| v[i]).collect();
        if ws.is_empty() {
            continue;
        }
        windows.push(StoryWindow {
            story: story.indices().to_vec(),
            sign: *sign,
            t_min: ws.iter().map(|w| w.0).fold(f64::INFINITY, f64::min),
            t_max: ws.iter().map(|w| w.1).fold(0.0, f64::max),
        });
    }
    let c1 = windows
        .iter()
        .filter(|w| !w.story.is_empty())
        .map(|w| w.t_min / w.story.len() as f64)
        .fold(f64::INFINITY, f64::min);
    let c2 = windows
        .iter()
        .map(|w| w.t_max / (w.story.len() + 1) as f64)
        .fold(0.0, f64::max);
    if !(c1.is_finite() && c1 > 0.0 && c2 > 0.0) {
        return Err(Error::Inconsistent("no reflected story has a nonempty support window".into()));
    }

    let n_t = (t_max / dt).floor() as usize + 1;
    let t: Vec<f64> = (0..n_t).map(|i| i as f64 * dt).collect();
    // Two stories per length (one per first body), one empty story.
    let longest = (t_max / c1).floor() as usize + 1;
    let mut window_count = Vec::with_capacity(n_t);
    let mut cumulative_count = Vec::with_capacity(n_t);
    let mut direct_count = Vec::with_capacity(n_t);
    for &ti in &t {
        let mut win = usize::from(ti <= c2);
        let mut cum = 1;
        for n in 1..=longest {
            let nf = n as f64;
            if c1 * nf <= ti {
                cum += 2;
                if ti <= c2 * (nf + 1.0) {
                    win += 2;
                }
            }
        }
        window_count.push(win);
        cumulative_count.push(cum);
        let mut seen: Vec<&[u8]> = Vec::new();
        for w in windows.iter().filter(|w| w.t_min <= ti && ti <= w.t_max) {
            if !seen.contains(&w.story.as_slice()) {
                seen.push(&w.story);
            }
        }
        direct_count.push(seen.len());
    }
    let fit = linear_fit(&t, &window_count.iter().map(|&c| c as f64).collect::<Vec<_>>());
    Ok(StoryCensus {
        windows,
        c1,
        c2,
        t,
        window_count,
        cumulative_count,
        direct_count,
        complete_until: c1 * measure_len as f64,
        fit,
    })
}
