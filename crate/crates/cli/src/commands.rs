use raytrap_core::amplitude::{amplitude_decay, chi0_samples, convergence_check, story_census, AmplitudeConfig};
use raytrap_core::billiard::{contracting_product, flow, return_map, return_map_with_step, PhasePoint, Story};
use raytrap_core::geometry::Scene;
use raytrap_core::linalg::Vec3;
use raytrap_core::morawetz::{
    self, bilaplacian_threshold, check_derivatives, illumination, scene_certificate, two_center_analysis, verify_bilaplacian,
    DogBone, Weight,
};
use raytrap_core::parametrix::{budget_doubling, default_budget, free_term, reflected_sum, remainder_budget, ParametrixConfig};
use raytrap_core::phase::{evaluate_phase, PhaseQuery, Sign};
use raytrap_core::trapped::{build_cutoff, compute_trapped_set, shrinkage_fit, GridSpec};
use raytrap_core::DoubleDouble;

use crate::args::*;
use crate::config::RunConfig;
use crate::record::{ResultRecord, Table};
use crate::CliError;

/// Frequency direction of the amplitude runs: the axis, slightly tilted.
pub fn amplitude_xi() -> Vec3<f64> {
    Vec3::new(1.0, 0.03, 0.01).normalize()
}

/// Expansion per unit time of the periodic ray from the contracting product.
pub fn periodic_rate(scene: &Scene<f64>) -> Result<f64, CliError> {
    Ok(-contracting_product(scene, scene.gap() * 1e-4, 4)?.ln() / (2.0 * scene.gap()))
}

pub fn run(cmd: &Command, cfg: &RunConfig, scene: &Scene<f64>) -> Result<ResultRecord, CliError> {
    match cmd {
        Command::Scene => scene_summary(cfg, scene),
        Command::Billiard(b) => billiard(b, cfg, scene),
        Command::TrappedSet(t) => trapped(t, cfg, scene),
        Command::Phase(p) => phase(p, cfg, scene),
        Command::Amplitude(a) => amplitude(a, cfg, scene),
        Command::Parametrix(p) => parametrix(p, cfg, scene),
        Command::Morawetz(m) => morawetz_cmd(m, cfg, scene),
        Command::Acceptance(_) => unreachable!("handled by the runner"),
    }
}

fn scene_summary(cfg: &RunConfig, s: &Scene<f64>) -> Result<ResultRecord, CliError> {
    let mut r = ResultRecord::new(cfg, "scene");
    r.scalar("gap", s.gap())
        .scalar("midpoint", s.midpoint().to_f64())
        .scalar("axis", s.axis_e.to_f64())
        .scalar("trapped_ray", [s.trapped.a1.to_f64(), s.trapped.a2.to_f64()])
        .scalar("diameter", s.diameter())
        .scalar("escape_radius", s.escape_radius())
        .scalar("cylinder_radius", s.cylinder_radius)
        .scalar("convexity_margins", s.convexity_margins(2000));
    Ok(r)
}

fn billiard(cmd: &BilliardCmd, cfg: &RunConfig, s: &Scene<f64>) -> Result<ResultRecord, CliError> {
    match *cmd {
        BilliardCmd::Orbit { step } => {
            let rm = match step {
                Some(h) => return_map_with_step(s, h)?,
                None => return_map(s)?,
            };
            let mut r = ResultRecord::new(cfg, "billiard orbit");
            let mut t = Table::new("monodromy", &["row", "c0", "c1", "c2", "c3"]);
            for (i, row) in rm.monodromy.iter().enumerate() {
                t.push(std::iter::once(i as f64).chain(row.iter().copied()).collect());
            }
            r.scalar("lambda", rm.lambda).scalar("rate_per_unit_time", rm.rate_per_unit_time()).report(&rm).table(t);
            Ok(r)
        }
        BilliardCmd::Flow { x, xi, t } => {
            let tr = flow(s, PhasePoint::new(Vec3::from_f64(x), Vec3::from_f64(xi)), t)?;
            let mut r = ResultRecord::new(cfg, "billiard flow");
            let mut tab = Table::new("reflections", &["index", "body", "x", "y", "z"]);
            for (i, e) in tr.events.iter().enumerate() {
                let p = e.point.to_f64();
                tab.push(vec![i as f64, e.body as f64, p[0], p[1], p[2]]);
            }
            r.scalar("story", tr.story.indices())
                .scalar("final_x", tr.final_state.x.to_f64())
                .scalar("final_xi", tr.final_state.xi.to_f64())
                .scalar("escaped", tr.escaped)
                .scalar("escape_time", tr.escape_time)
                .scalar("tangential", tr.tangential)
                .table(tab);
            Ok(r)
        }
    }
}

fn trapped(cmd: &TrappedCmd, cfg: &RunConfig, s: &Scene<f64>) -> Result<ResultRecord, CliError> {
    match cmd {
        TrappedCmd::Shrinkage { resolution, times } => {
            let fit = shrinkage_fit(s, &s.default_region(), times, *resolution)?;
            let rate = return_map(s)?.rate_per_unit_time();
            let mut r = ResultRecord::new(cfg, "trapped-set shrinkage");
            let mut t = Table::new("shrinkage", &["t", "distance", "cells"]);
            for p in &fit.points {
                t.push(vec![p.t, p.distance, p.cells as f64]);
            }
            r.scalar("c_est", fit.c_est)
                .scalar("r2", fit.r2)
                .scalar("hyperbolic_rate", rate)
                .scalar("relative_gap", (fit.c_est - rate).abs() / rate)
                .report(&fit)
                .table(t);
            Ok(r)
        }
        &TrappedCmd::Grid { t, axial, transverse, directions } => {
            let spec = GridSpec::new(axial, transverse, directions)?;
            let g = compute_trapped_set(s, s.default_region(), t, spec, None)?;
            let mut r = ResultRecord::new(cfg, "trapped-set grid");
            r.scalar("t", t)
                .scalar("members", g.count())
                .scalar("cells", g.membership.len())
                .scalar("warning", &g.warning);
            Ok(r)
        }
    }
}

fn phase(a: &PhaseArgs, cfg: &RunConfig, s: &Scene<f64>) -> Result<ResultRecord, CliError> {
    let story = Story::parse(&a.story)?;
    let sign = match a.sign {
        SignArg::Plus => Sign::Plus,
        SignArg::Minus => Sign::Minus,
    };
    let y = a.y.map(Vec3::from_f64).unwrap_or_else(|| s.midpoint());
    let q = PhaseQuery::new(Vec3::from_f64(a.x), Vec3::from_f64(a.xi), story, y, sign);
    let sol = evaluate_phase(s, &q)?;
    let mut r = ResultRecord::new(cfg, "phase");
    r.scalar("phase", sol.sample.phase)
        .scalar("grad", sol.sample.grad.to_f64())
        .scalar("grad_norm_error", (sol.sample.grad.norm() - 1.0).abs())
        .scalar("principal_curvatures", sol.sample.principal_curvatures())
        .scalar("l_j", sol.sample.l_j)
        .scalar("reflection_points", sol.reflection_points().iter().map(|p| p.to_f64()).collect::<Vec<_>>());
    Ok(r)
}

fn amplitude(cmd: &AmplitudeCmd, cfg: &RunConfig, s: &Scene<f64>) -> Result<ResultRecord, CliError> {
    let c_est = return_map(s)?.rate_per_unit_time();
    match *cmd {
        AmplitudeCmd::Decay { h, t_max, dt, max_len, samples } => {
            let q = build_cutoff(s, 0.25 / c_est, h, 0.5, 2.0, c_est)?;
            let acfg = AmplitudeConfig::new(s.midpoint(), h);
            let xs = chi0_samples(s, samples, 0.1, cfg.seed);
            let n = (t_max / dt).floor() as usize;
            let ts: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
            let d = amplitude_decay(s, &q, &acfg, amplitude_xi(), &xs, &ts, max_len, 3.0)?;
            let mut r = ResultRecord::new(cfg, "amplitude decay");
            let mut t = Table::new("decay", &["t", "sup_sum"]);
            for (a, b) in d.t.iter().zip(&d.sup_sum) {
                t.push(vec![*a, *b]);
            }
            let lambda = contracting_product(s, s.gap() * 1e-4, 4)?;
            r.scalar("rate", d.rate)
                .scalar("periodic_rate", -lambda.ln() / (2.0 * s.gap()))
                .report(&d)
                .table(t);
            Ok(r)
        }
        AmplitudeCmd::Convergence { r_max, dd } => {
            let rep = if dd {
                convergence_check(&cfg.scene.build::<DoubleDouble>()?, r_max)?
            } else {
                convergence_check(s, r_max)?
            };
            let mut r = ResultRecord::new(cfg, "amplitude convergence");
            let mut t = Table::new("increments", &["pattern", "r", "sup_increment"]);
            for (i, p) in rep.patterns.iter().enumerate() {
                for row in &p.rows {
                    if let Some(v) = row.sup_increment {
                        t.push(vec![i as f64, row.r as f64, v]);
                    }
                }
            }
            r.scalar("lambda", rep.lambda).report(&rep).table(t);
            Ok(r)
        }
        AmplitudeCmd::Census { h, t_max, dt, samples } => {
            let q = build_cutoff(s, 0.25 / c_est, h, 0.5, 2.0, c_est)?;
            let acfg = AmplitudeConfig::new(s.midpoint(), h);
            let xs = chi0_samples(s, samples, 0.1, cfg.seed);
            let c = story_census(s, &q, &acfg, amplitude_xi(), &xs, t_max, dt, 6)?;
            let mut r = ResultRecord::new(cfg, "amplitude census");
            let mut t = Table::new("census", &["t", "window_count", "cumulative_count", "direct_count"]);
            for i in 0..c.t.len() {
                t.push(vec![c.t[i], c.window_count[i] as f64, c.cumulative_count[i] as f64, c.direct_count[i] as f64]);
            }
            r.scalar("c1", c.c1).scalar("c2", c.c2).scalar("fit", c.fit).report(&c).table(t);
            Ok(r)
        }
    }
}

fn parametrix(cmd: &ParametrixCmd, cfg: &RunConfig, s: &Scene<f64>) -> Result<ResultRecord, CliError> {
    let c_est = periodic_rate(s)?;
    match *cmd {
        ParametrixCmd::Free { h, t_start, t_end, dt } => {
            let pc = ParametrixConfig::new(s, h, c_est)?.with_times(t_start, t_end, dt)?;
            let curve = free_term(&pc)?;
            let mut r = ResultRecord::new(cfg, "parametrix free");
            let mut t = Table::new("free", &["t", "sup", "sup_h2"]);
            for (a, b) in curve.t.iter().zip(&curve.values) {
                t.push(vec![*a, *b, b * h * h]);
            }
            r.scalar("p_hat", curve.p_hat).report(&curve).table(t);
            Ok(r)
        }
        ParametrixCmd::Decay { h, t_end, dt, samples, k, no_doubling } => {
            let mut pc = ParametrixConfig::new(s, h, c_est)?;
            if let Some(k) = k {
                pc = pc.with_k(k)?;
            }
            let (t0, t1) = (pc.t_start, t_end.unwrap_or(pc.t_end));
            pc = pc.with_times(t0, t1, dt)?;
            pc.samples = samples;
            pc.seed = cfg.seed;
            pc.validate()?;
            let q = build_cutoff(s, pc.cutoff_eps, h, pc.alpha0, pc.beta0, pc.c_est)?;
            let budget = default_budget(s, &pc);
            let (base, doubled, change) = if no_doubling {
                (reflected_sum(s, &pc, &q, budget)?, None, None)
            } else {
                let d = budget_doubling(s, &pc, &q, budget)?;
                (d.base, Some(d.doubled), Some(d.max_relative_change))
            };
            let mut r = ResultRecord::new(cfg, "parametrix decay");
            let norm = base.combined_normalized();
            let mut t = Table::new("decay", &["t", "reflected", "reflected_h2", "combined_normalized", "doubled"]);
            for i in 0..base.curve.t.len() {
                let v = base.curve.values[i];
                let dv = doubled.as_ref().map_or(f64::NAN, |d| d[i]);
                t.push(vec![base.curve.t[i], v, v * h * h, norm[i], dv]);
            }
            r.scalar("nu_hat", base.curve.nu_hat)
                .scalar("story_budget", budget)
                .scalar("doubling_change", change)
                .scalar("stats", &base.stats)
                .table(t);
            Ok(r)
        }
        ParametrixCmd::Budget { h, k } => {
            let pc = ParametrixConfig::new(s, h, c_est)?.with_k(k)?;
            let b = remainder_budget(&pc)?;
            let mut r = ResultRecord::new(cfg, "parametrix budget");
            r.report(&b);
            Ok(r)
        }
    }
}

fn morawetz_cmd(cmd: &MorawetzCmd, cfg: &RunConfig, s: &Scene<f64>) -> Result<ResultRecord, CliError> {
    match *cmd {
        MorawetzCmd::Report { weight, c, a, alpha, samples } => {
            let mut r = ResultRecord::new(cfg, "morawetz report");
            match weight {
                WeightKind::TwoCenter => {
                    let w = Weight::TwoCenter { c };
                    let checks = check_derivatives(&w, a, samples, cfg.seed)?;
                    let cert = scene_certificate(&w, s, a, samples, 2000, cfg.seed)?;
                    let tc = two_center_analysis(s, Vec3::from_f64(c), a, alpha, samples.max(1000) * 10, cfg.seed)?;
                    r.scalar("flags", cert.flags)
                        .scalar("derivatives", &checks)
                        .scalar("certificate", &cert)
                        .scalar("two_center", &tc);
                }
                WeightKind::Gauge => {
                    return Err(CliError::Usage("use `morawetz gauge` for gauge weights".into()));
                }
            }
            Ok(r)
        }
        MorawetzCmd::Gauge { n, k, eps, samples } => {
            let w = Weight::gauge(n, k, eps)?;
            let mut r = ResultRecord::new(cfg, "morawetz gauge");
            r.scalar("derivatives", check_derivatives(&w, 1.0, samples, cfg.seed)?)
                .scalar("bilaplacian", verify_bilaplacian(&w, samples, cfg.seed)?);
            if n == 3 {
                r.scalar("illumination", illumination(&w, &DogBone::default(), 200, 64)?);
            }
            Ok(r)
        }
        MorawetzCmd::Threshold { n, k } => {
            let t = bilaplacian_threshold(n, k)?;
            let mut r = ResultRecord::new(cfg, "morawetz threshold");
            r.scalar("eps0", t.eps0).scalar("A_at_eps0", t.a_at(t.eps0)).report(&t);
            Ok(r)
        }
        MorawetzCmd::LogFactor { t } => {
            let mut r = ResultRecord::new(cfg, "morawetz log-factor");
            r.scalar("T", t).scalar("log_factor", morawetz::log_factor(t)?);
            Ok(r)
        }
    }
}
