//! One runner per experiment kind. Replicas run in parallel and are merged
//! in seed order, so outputs never depend on scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{Experiment, ExperimentConfig};
use super::output::{infection_intervals, Output, SiteColumns};
use crate::analysis::{density_check, f_bracket_check, fkg_witness, isoperimetric_scan, simulate_birth, DensityOptions};
use crate::coupling::{coupled_run, growth_tail_estimates, restart_run, RestartEnd, TailCurve, TailOptions};
use crate::dynamics::{lifetime, Recording, Simulation, Trajectory};
use crate::error::{Error, Result};
use crate::particles::{fixation_experiment, reach_times, FixationOptions};
use crate::randomness::{materialize, ModelParams, PoissonField};
use crate::stats::{linear_fit, summarize, variance_se, wilson};
use crate::topology::{Graph, LatticeBox, Point, Topology, TruncatedTree};
use crate::tree_survival::{survival_proxy, supermartingale_scan, threshold_table};

/// Runs `f` for every replica seed in parallel; results come back in seed
/// order and errors name their seed.
fn replicas<T, F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    (cfg.seed..cfg.seed + cfg.replicas)
        .into_par_iter()
        .map(|seed| f(seed).map_err(|e| e.at_seed(seed)))
        .collect()
}

fn parse_sites<G: Graph>(graph: &G, field: &str, list: &[String]) -> Result<Vec<G::Site>> {
    if list.is_empty() {
        return Ok(vec![graph.origin()]);
    }
    list.iter()
        .map(|s| graph.parse_site(s).map_err(|e| Error::Config(format!("experiment.{field}: {e}"))))
        .collect()
}

fn model(cfg: &ExperimentConfig) -> ModelParams {
    cfg.model.expect("validated configuration has a model")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn grid(horizon: f64, n: usize, from_zero: bool) -> Vec<f64> {
    let lo = if from_zero { 0 } else { 1 };
    (lo..=n).map(|i| horizon * i as f64 / n as f64).collect()
}

/// Dispatches on the graph kind for experiments that run on either.
macro_rules! on_graph {
    ($cfg:expr, |$g:ident| $body:expr) => {
        match Topology::from_spec($cfg.topology.as_ref().expect("validated configuration has a topology"))? {
            Topology::Lattice($g) => $body,
            Topology::Tree($g) => $body,
        }
    };
}

fn lattice(cfg: &ExperimentConfig) -> Result<LatticeBox> {
    match Topology::from_spec(cfg.topology.as_ref().expect("validated configuration has a topology"))? {
        Topology::Lattice(b) => Ok(b),
        Topology::Tree(_) => Err(Error::Config("topology: a lattice box is required".into())),
    }
}

fn tree(cfg: &ExperimentConfig) -> Result<TruncatedTree> {
    match Topology::from_spec(cfg.topology.as_ref().expect("validated configuration has a topology"))? {
        Topology::Tree(t) => Ok(t),
        Topology::Lattice(_) => Err(Error::Config("topology: a tree is required".into())),
    }
}

pub(super) fn run(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    match &cfg.experiment {
        Experiment::Simulate { .. } => on_graph!(cfg, |g| simulate(cfg, &g, out)),
        Experiment::Couple { .. } => on_graph!(cfg, |g| couple(cfg, &g, out)),
        Experiment::Restart {} => on_graph!(cfg, |g| restart(cfg, &g, out)),
        Experiment::Shape { .. } => shape(cfg, &lattice(cfg)?, out),
        Experiment::Fixation { .. } => fixation(cfg, &lattice(cfg)?, out),
        Experiment::Particles { .. } => particles(cfg, &lattice(cfg)?, out),
        Experiment::Birth { .. } => birth(cfg, out),
        Experiment::TreeThresholds { .. } => tree_thresholds(cfg, out),
        Experiment::TreeDrift { .. } => tree_drift(cfg, &tree(cfg)?, out),
        Experiment::TreeSurvival { .. } => tree_survival(cfg, &tree(cfg)?, out),
        Experiment::Fkg { .. } => fkg(cfg, out),
        Experiment::Tails { .. } => tails(cfg, &lattice(cfg)?, out),
        Experiment::Density { .. } => density(cfg, &lattice(cfg)?, out),
        Experiment::Isoperimetric { .. } => isoperimetric(cfg, out),
        Experiment::Selftest { seeds } => super::selftest::run(*seeds, cfg.seed, out),
    }
}

struct SimReplica<S> {
    seed: u64,
    rows: Vec<String>,
    tau: Option<f64>,
    events: u64,
    boundary: bool,
    kept: Option<Trajectory<S>>,
}

fn simulate<G: SiteColumns + Clone>(cfg: &ExperimentConfig, g: &G, out: &mut Output) -> Result<Vec<String>> {
    let Experiment::Simulate { initial, times, snapshots, once_infected, snapshot_replicas, intervals, event_log } =
        &cfg.experiment
    else {
        unreachable!()
    };
    let params = model(cfg);
    let initial = parse_sites(g, "initial", initial)?;
    let times = if times.is_empty() { grid(cfg.horizon, 10, true) } else { times.clone() };
    let keep_upto = cfg.seed + snapshot_replicas;
    let label = params.to_string();
    let reps = replicas(cfg, |seed| {
        let field = PoissonField::new(g, params, cfg.horizon, seed)?;
        let keep = seed < keep_upto && (!snapshots.is_empty() || *intervals || *event_log);
        let rec = Recording { deltas: keep, hits: true, snapshots: times.clone() };
        let traj = Simulation::new(&field, &initial).recording(rec).run(cfg.horizon)?;
        let hits = traj.hits.as_ref().expect("hits recorded");
        let tau = lifetime(&traj);
        let rows = traj
            .snapshots
            .iter()
            .map(|(t, xi)| {
                let h = hits.values().filter(|&&s| s <= *t).count();
                let ends = xi.first().zip(xi.last()).and_then(|(l, r)| Some((g.line_coord(*r)?, g.line_coord(*l)?)));
                let (r, l) = ends.map_or((String::new(), String::new()), |(r, l)| (r.to_string(), l.to_string()));
                format!(
                    "{seed},{label},{t},{},{h},{r},{l},{},{}",
                    xi.len(),
                    tau.is_censored() as u8,
                    traj.boundary_touched as u8
                )
            })
            .collect();
        Ok(SimReplica {
            seed,
            rows,
            tau: traj.extinction,
            events: traj.events_applied,
            boundary: traj.boundary_touched,
            kept: keep.then_some(traj),
        })
    })?;
    out.csv(
        "trajectory_stats.csv",
        "seed,model,t,|xi_t|,|H_t|,r_t,l_t,tau_censored,boundary_touched",
        reps.iter().flat_map(|r| r.rows.iter().cloned()),
    )?;
    out.csv(
        "lifetimes.csv",
        "seed,tau,tau_censored,events,boundary_touched",
        reps.iter().map(|r| {
            format!("{},{},{},{},{}", r.seed, r.tau.unwrap_or(cfg.horizon), r.tau.is_none() as u8, r.events, r.boundary as u8)
        }),
    )?;
    let mut interval_rows = Vec::new();
    for r in &reps {
        let Some(traj) = &r.kept else { continue };
        if !snapshots.is_empty() {
            out.snapshots(&format!("snapshots/seed{}", r.seed), g, traj, snapshots, *once_infected)?;
        }
        if *intervals {
            for (x, s, e) in infection_intervals(traj)? {
                interval_rows.push(format!("{},{},{s},{e}", r.seed, g.row(x)));
            }
        }
        if *event_log {
            let field = PoissonField::new(g, params, cfg.horizon, r.seed)?;
            let log = materialize(&field)?.to_csv_string();
            let mut lines = log.lines();
            let header = lines.next().unwrap_or_default().to_string();
            out.csv(&format!("events_seed{}.csv", r.seed), &header, lines.map(str::to_string))?;
        }
    }
    if *intervals {
        out.csv("intervals.csv", &format!("seed,{},start,end", g.columns()), interval_rows)?;
    }
    let died = reps.iter().filter(|r| r.tau.is_some()).count() as u64;
    let survival = wilson(cfg.replicas - died, cfg.replicas, 1.96);
    out.json("summary.json", &json!({ "model": label, "replicas": cfg.replicas, "survived_to_horizon": survival }))?;
    Ok(vec![format!("{label}: {} of {} replicas alive at t={}", cfg.replicas - died, cfg.replicas, cfg.horizon)])
}

fn couple<G: SiteColumns + Clone>(cfg: &ExperimentConfig, g: &G, out: &mut Output) -> Result<Vec<String>> {
    let Experiment::Couple { a, b, c } = &cfg.experiment else { unreachable!() };
    let params = model(cfg);
    let (a, b, c) = (parse_sites(g, "a", a)?, parse_sites(g, "b", b)?, parse_sites(g, "c", c)?);
    let reps = replicas(cfg, |seed| {
        let triple = coupled_run(g, &a, &b, &c, params, cfg.horizon, seed)?;
        let row = |name: &str, t: &Trajectory<G::Site>| {
            let tau = lifetime(t);
            format!(
                "{seed},{name},{},{},{},{},{}",
                t.final_config.len(),
                tau.value(),
                tau.is_censored() as u8,
                t.events_applied,
                t.boundary_touched as u8
            )
        };
        Ok([row("lower", &triple.lower), row("middle", &triple.middle), row("upper", &triple.upper)])
    })?;
    out.csv(
        "coupled.csv",
        "seed,component,final_size,tau,tau_censored,events,boundary_touched",
        reps.into_iter().flatten(),
    )?;
    out.json("summary.json", &json!({ "model": params.to_string(), "replicas": cfg.replicas, "containment_violations": 0 }))?;
    Ok(vec![format!("containment held on all {} replicas", cfg.replicas)])
}

fn restart<G: SiteColumns + Clone>(cfg: &ExperimentConfig, g: &G, out: &mut Output) -> Result<Vec<String>> {
    let params = model(cfg);
    let o = [g.origin()];
    let reps = replicas(cfg, |seed| {
        let triple = coupled_run(g, &o, &o, &o, params, cfg.horizon, seed)?;
        let rec = restart_run(&triple)?;
        Ok((seed, rec))
    })?;
    out.csv(
        "restarts.csv",
        "seed,k,u_k,z_k",
        reps.iter().flat_map(|(seed, r)| {
            r.u.iter().zip(&r.z).enumerate().map(move |(k, (u, z))| format!("{seed},{k},{u},{}", g.format_site(*z)))
        }),
    )?;
    let ks: Vec<f64> = reps.iter().map(|(_, r)| r.k() as f64).collect();
    let survived = reps.iter().filter(|(_, r)| r.end == RestartEnd::LowerSurvived).count() as u64;
    let mean_k = ks.iter().sum::<f64>() / ks.len() as f64;
    out.json(
        "summary.json",
        &json!({
            "model": params.to_string(),
            "replicas": cfg.replicas,
            "mean_restarts": mean_k,
            "max_restarts": ks.iter().copied().fold(0.0, f64::max),
            "lower_survived": wilson(survived, cfg.replicas, 1.96),
        }),
    )?;
    Ok(vec![format!("mean number of restarts {mean_k:.3}; restarted process alive at horizon in {survived} replicas")])
}

#[derive(Serialize)]
struct ShapeReplica {
    seed: u64,
    alpha_hat: Option<f64>,
    alpha_left: Option<f64>,
    r_over_t_cv: Option<f64>,
    boundary_touched: bool,
}

fn shape(cfg: &ExperimentConfig, g: &LatticeBox, out: &mut Output) -> Result<Vec<String>> {
    let Experiment::Shape { times, fit_from, snapshot_replicas } = &cfg.experiment else { unreachable!() };
    let params = model(cfg);
    let times = if times.is_empty() { grid(cfg.horizon, 20, false) } else { times.clone() };
    let fit_from = fit_from.unwrap_or(cfg.horizon / 5.0);
    let d = g.dim();
    let o = [Point::origin()];
    let reps = replicas(cfg, |seed| {
        let field = PoissonField::new(g, params, cfg.horizon, seed)?;
        let rec = Recording { deltas: false, hits: true, snapshots: times.clone() };
        let traj = Simulation::new(&field, &o).recording(rec).run(cfg.horizon)?;
        let hits = traj.hits.as_ref().expect("hits recorded");
        let mut rows = Vec::new();
        let (mut fit_t, mut fit_r, mut fit_l) = (Vec::new(), Vec::new(), Vec::new());
        for (t, xi) in &traj.snapshots {
            let h: Vec<&Point> = hits.iter().filter(|(_, &s)| s <= *t).map(|(x, _)| x).collect();
            let radius = h.iter().map(|p| p.max_norm()).max().unwrap_or(0);
            if d == 1 {
                let (r, l) = match (xi.last(), xi.first()) {
                    (Some(r), Some(l)) => (r.0[0].to_string(), l.0[0].to_string()),
                    _ => (String::new(), String::new()),
                };
                if let (Some(r), Some(l)) = (xi.last(), xi.first()) {
                    if *t >= fit_from && *t > 0.0 {
                        fit_t.push(*t);
                        fit_r.push(r.0[0] as f64);
                        fit_l.push(l.0[0] as f64);
                    }
                }
                rows.push(format!("{seed},{t},{r},{l},{},{}", xi.len(), h.len()));
            } else {
                rows.push(format!("{seed},{t},{},{},{radius}", xi.len(), h.len()));
            }
        }
        let alpha_hat = linear_fit(&fit_t, &fit_r).ok().map(|f| f.slope);
        let alpha_left = linear_fit(&fit_t, &fit_l).ok().map(|f| -f.slope);
        let ratios: Vec<f64> = fit_t.iter().zip(&fit_r).map(|(t, r)| r / t).collect();
        let r_over_t_cv = summarize(&ratios).ok().map(|s| s.variance.sqrt() / s.mean.abs());
        let keep = (seed < cfg.seed + snapshot_replicas).then_some(traj.clone());
        let summary = ShapeReplica { seed, alpha_hat, alpha_left, r_over_t_cv, boundary_touched: traj.boundary_touched };
        Ok((rows, summary, keep))
    })?;
    let header = if d == 1 { "seed,t,r_t,l_t,|xi_t|,|H_t|" } else { "seed,t,|xi_t|,|H_t|,radius_H_t" };
    out.csv("shape.csv", header, reps.iter().flat_map(|r| r.0.iter().cloned()))?;
    for (_, s, keep) in &reps {
        if let Some(traj) = keep {
            out.snapshots(&format!("snapshots/seed{}", s.seed), g, traj, &times, true)?;
        }
    }
    let alphas: Vec<f64> = reps.iter().filter_map(|r| r.1.alpha_hat).collect();
    let fit = summarize(&alphas).ok();
    let per: Vec<&ShapeReplica> = reps.iter().map(|r| &r.1).collect();
    out.json(
        "summary.json",
        &json!({
            "model": params.to_string(),
            "fit_from": fit_from,
            "alpha_mean": fit.map(|s| s.mean),
            "alpha_relative_sd": fit.map(|s| s.variance.sqrt() / s.mean.abs()),
            "replicas": per,
        }),
    )?;
    Ok(match fit {
        Some(s) => vec![format!("α̂ = {:.4} ± {:.4} (SE) over {} replicas", s.mean, s.se, s.n)],
        None => vec![format!("shape statistics written for {} replicas", cfg.replicas)],
    })
}

fn fixation(cfg: &ExperimentConfig, g: &LatticeBox, out: &mut Output) -> Result<Vec<String>> {
    let Experiment::Fixation { core_radius, margin, initial } = &cfg.experiment else { unreachable!() };
    let initial = if initial.is_empty() { g.sites() } else { parse_sites(g, "initial", initial)? };
    let opts = FixationOptions {
        initial,
        core_radius: *core_radius,
        horizon: cfg.horizon,
        margin: *margin,
        replicas: cfg.replicas,
        seed: cfg.seed,
    };
    let report = fixation_experiment(g, model(cfg), &opts)?;
    out.csv(
        "fixation.csv",
        "seed,site,last_change,final_state",
        report.replicas.iter().flat_map(|r| {
            r.sites.iter().map(move |s| {
                format!("{},{},{},{}", r.seed, g.format_site(s.site), opt(s.last_change), s.final_state as u8)
            })
        }),
    )?;
    out.json(
        "summary.json",
        &json!({
            "horizon": report.horizon,
            "margin": report.margin,
            "core_radius": report.core_radius,
            "fixed_infected": report.fixed_infected,
            "fixed_healthy": report.fixed_healthy,
            "inconsistent": report.inconsistent,
        }),
    )?;
    Ok(vec![format!(
        "fixed infected in {:.4} of replicas (95% CI {:.4}–{:.4}), fixed healthy in {:.4}",
        report.fixed_infected.p_hat, report.fixed_infected.ci_lo, report.fixed_infected.ci_hi, report.fixed_healthy.p_hat
    )])
}

fn particles(cfg: &ExperimentConfig, g: &LatticeBox, out: &mut Output) -> Result<Vec<String>> {
    let Experiment::Particles { particles, target, initial } = &cfg.experiment else { unreachable!() };
    let params = model(cfg);
    let tagged = parse_sites(g, "particles", particles)?;
    let target = match target {
        Some(t) => g.parse_site(t).map_err(|e| Error::Config(format!("experiment.target: {e}")))?,
        None => Point::origin(),
    };
    let initial = match initial {
        Some(list) if list.is_empty() => Vec::new(),
        Some(list) => parse_sites(g, "initial", list)?,
        None => vec![target],
    };
    let dist = |a: &Point| -> u32 { a.0.iter().zip(target.0).map(|(x, y)| x.abs_diff(y)).sum() };
    let reps = replicas(cfg, |seed| {
        let field = PoissonField::new(g, params, cfg.horizon, seed)?;
        Ok((seed, reach_times(&initial, &field, &tagged, target, cfg.horizon)?))
    })?;
    out.csv(
        "reach_times.csv",
        "seed,particle,|a|_1,iota_censored,iota",
        reps.iter().flat_map(|(seed, times)| {
            tagged.iter().zip(times).map(move |(a, t)| {
                format!("{seed},{},{},{},{}", g.format_site(*a), dist(a), t.is_censored() as u8, t.value())
            })
        }),
    )?;
    let per: Vec<_> = tagged
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let hits = reps.iter().filter(|(_, t)| !t[i].is_censored()).count() as u64;
            json!({
                "particle": g.format_site(*a),
                "l1": dist(a),
                "reached": wilson(hits, cfg.replicas, 1.96),
                "bound": (1.0 / (1.0 + params.lambda)).powi(dist(a) as i32),
            })
        })
        .collect();
    out.json("summary.json", &json!({ "model": params.to_string(), "target": g.format_site(target), "particles": per }))?;
    Ok(vec![format!("reach times of {} particles over {} replicas", tagged.len(), cfg.replicas)])
}

fn birth(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    let Experiment::Birth { c, d, times, k_max } = &cfg.experiment else { unreachable!() };
    let lambda = cfg.model.map_or(1.0, |m| m.lambda);
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let paths = replicas(cfg, |seed| simulate_birth(*c, lambda, *d, horizon, seed))?;
    let mut rows = Vec::new();
    let mut stats = Vec::new();
    for &t in times {
        let xs: Vec<f64> = paths.iter().map(|p| p.x(t)).collect();
        let s = summarize(&xs)?;
        let vse = variance_se(&xs)?;
        let cl_t = c * lambda * t;
        rows.push(format!("{t},{},{},{},{},{vse},{cl_t}", s.n, s.mean, s.se, s.variance));
        stats.push(json!({ "t": t, "mean_x": s.mean, "se": s.se, "var_x": s.variance, "var_se": vse, "c_lambda_t": cl_t }));
    }
    out.csv("birth.csv", "t,n,mean_x,se_mean,var_x,var_se,c_lambda_t", rows)?;
    let bracket = f_bracket_check(*d, *k_max);
    out.json("summary.json", &json!({ "c": c, "lambda": lambda, "d": d, "times": stats, "f_bracket": bracket }))?;
    Ok(vec![format!(
        "F bracket up to k={}: {} lower failures, {} upper failures",
        k_max, bracket.lower_failures, bracket.upper_failures
    )])
}

fn tree_thresholds(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    let Experiment::TreeThresholds { ds, nus } = &cfg.experiment else { unreachable!() };
    let rows = threshold_table(ds, nus)?;
    out.csv(
        "thresholds.csv",
        "d,nu,rms_lo,rms_hi,cps_lo,cps_hi,cps_weak_hi,in_W",
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{}",
                r.d, r.nu, r.rms_lo, r.rms_hi, r.cps_lo, r.cps_hi, r.cps_weak_hi, r.in_w as u8
            )
        }),
    )?;
    let onset: BTreeMap<u32, Option<f64>> = ds.iter().map(|&d| (d, crate::tree_survival::w_onset(d))).collect();
    let first = ds.iter().copied().filter(|&d| onset[&d].is_some()).min();
    out.json("summary.json", &json!({ "rows": rows, "w_onset_nu": onset, "first_d_with_window": first }))?;
    Ok(vec![match first {
        Some(d) => format!("window W first nonempty at d={d} (ν > {:.4})", onset[&d].unwrap_or(f64::NAN)),
        None => "window W empty for every requested d".into(),
    }])
}

fn tree_drift(cfg: &ExperimentConfig, t: &TruncatedTree, out: &mut Output) -> Result<Vec<String>> {
    let Experiment::TreeDrift { lambdas, rho, samples, max_size } = &cfg.experiment else { unreachable!() };
    let d = t.branching();
    let rho = rho.unwrap_or(1.0 / (d as f64).sqrt());
    let report = supermartingale_scan(d, lambdas, model(cfg), rho, *samples, *max_size, cfg.seed)?;
    out.csv(
        "drift_scan.csv",
        "lambda,below_threshold,samples,violations,max_drift",
        report.rows.iter().map(|r| {
            format!("{},{},{},{},{}", r.lambda, r.below_threshold as u8, r.samples, r.violations, r.max_drift)
        }),
    )?;
    let witnesses: Vec<Option<Vec<String>>> = report
        .witnesses
        .iter()
        .map(|w| w.as_ref().map(|a| a.iter().map(|&x| t.format_site(x)).collect()))
        .collect();
    out.json("summary.json", &json!({ "d": d, "rho": rho, "rows": report.rows, "witnesses": witnesses }))?;
    let below_bad = report.rows.iter().filter(|r| r.below_threshold && r.violations > 0).count();
    Ok(vec![format!("{below_bad} sub-threshold rates with a positive drift")])
}

fn tree_survival(cfg: &ExperimentConfig, t: &TruncatedTree, out: &mut Output) -> Result<Vec<String>> {
    let Experiment::TreeSurvival { lambdas, max_infected } = &cfg.experiment else { unreachable!() };
    let base = model(cfg);
    let lambdas = if lambdas.is_empty() { vec![base.lambda] } else { lambdas.clone() };
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    let mut all = Vec::new();
    for lambda in lambdas {
        let params = ModelParams { lambda, ..base };
        let p = survival_proxy(params, t, cfg.horizon, cfg.replicas, cfg.seed, *max_infected)?;
        rows.push(format!(
            "{params},{lambda},{},{},{},{},{},{},{},{},{},{},{},{}",
            t.branching(),
            t.depth(),
            cfg.horizon,
            p.weak.n,
            p.weak.p_hat,
            p.weak.ci_lo,
            p.weak.ci_hi,
            p.strong.p_hat,
            p.strong.ci_lo,
            p.strong.ci_hi,
            p.truncated,
            p.capped
        ));
        lines.push(format!("{params}: weak {:.3}, strong {:.3}", p.weak.p_hat, p.strong.p_hat));
        all.push(json!({ "model": params.to_string(), "proxy": p }));
    }
    out.csv(
        "survival.csv",
        "model,lambda,d,depth,horizon,n,weak_p,weak_lo,weak_hi,strong_p,strong_lo,strong_hi,truncated,capped",
        rows,
    )?;
    out.json("summary.json", &json!({ "runs": all }))?;
    Ok(lines)
}

fn fkg(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    let Experiment::Fkg { len } = &cfg.experiment else { unreachable!() };
    let models = match cfg.model {
        Some(m) => vec![m],
        None => vec![ModelParams::rm(1.0), ModelParams::cp(1.0, 1.0), ModelParams::rms(1.0), ModelParams::cps(1.0, 1.0, 1.0)],
    };
    let mut lines = Vec::new();
    let mut all = Vec::new();
    for m in models {
        let w = fkg_witness(&m, *len)?;
        lines.push(match &w {
            Some(w) => format!("{m}: {w}"),
            None => format!("{m}: no incomparable transition on {len} sites"),
        });
        all.push(json!({ "model": m.to_string(), "witness": w, "text": w.as_ref().map(ToString::to_string) }));
    }
    out.json("summary.json", &json!({ "len": len, "models": all }))?;
    Ok(lines)
}

fn tail_rows(c: &TailCurve) -> Vec<String> {
    c.points.iter().map(|p| format!("{},{},{},{},{}", p.t, p.p_hat, p.ci_lo, p.ci_hi, p.n)).collect()
}

fn tails(cfg: &ExperimentConfig, g: &LatticeBox, out: &mut Output) -> Result<Vec<String>> {
    let Experiment::Tails { times, m1, m2, targets, component } = &cfg.experiment else { unreachable!() };
    let targets = if targets.is_empty() { Vec::new() } else { parse_sites(g, "targets", targets)? };
    let opts = TailOptions {
        times: times.clone(),
        m1: *m1,
        m2: *m2,
        targets,
        horizon: cfg.horizon,
        replicas: cfg.replicas,
        seed: cfg.seed,
        component: *component,
    };
    let report = growth_tail_estimates(g, model(cfg), &opts)?;
    let header = "t,p_hat,ci_lo,ci_hi,n";
    out.csv("tail_reach.csv", header, tail_rows(&report.reach))?;
    out.csv("tail_late_death.csv", header, tail_rows(&report.late_death))?;
    for (i, c) in report.slow_hit.iter().enumerate() {
        out.csv(&format!("tail_slow_hit_{i}.csv"), header, tail_rows(c))?;
    }
    out.json("summary.json", &report)?;
    let curves = std::iter::once(&report.reach).chain([&report.late_death]).chain(&report.slow_hit);
    Ok(curves
        .map(|c| format!("{}: {}", c.label, if c.decays() { "decays" } else { "no significant decay" }))
        .collect())
}

fn density(cfg: &ExperimentConfig, g: &LatticeBox, out: &mut Output) -> Result<Vec<String>> {
    let Experiment::Density { times, max_size } = &cfg.experiment else { unreachable!() };
    let table = isoperimetric_scan(g.dim(), *max_size)?;
    let opts = DensityOptions {
        times: times.clone(),
        replicas: cfg.replicas,
        seed: cfg.seed,
        c_hat: table.c_hat(),
        certified_size: table.max_size(),
    };
    let report = density_check(g, model(cfg), &opts)?;
    out.csv(
        "density.csv",
        "t,threshold,p_hat,ci_lo,ci_hi,n",
        report.points.iter().map(|p| {
            let f = &p.frequency;
            format!("{},{},{},{},{},{}", p.t, p.threshold, f.p_hat, f.ci_lo, f.ci_hi, f.n)
        }),
    )?;
    out.json("summary.json", &report)?;
    Ok(vec![format!(
        "Ĉ = {:.4}; {} certified frontier violations over {} events",
        report.c_hat, report.violations_certified, report.checked_events
    )])
}

fn isoperimetric(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    let Experiment::Isoperimetric { d, max_size } = &cfg.experiment else { unreachable!() };
    let table = isoperimetric_scan(*d, *max_size)?;
    out.csv(
        "isoperimetric.csv",
        "size,animals,min_frontier,ratio",
        table.rows.iter().map(|r| format!("{},{},{},{}", r.size, r.animals, r.min_frontier, r.ratio)),
    )?;
    out.json("summary.json", &json!({ "d": d, "c_hat": table.c_hat(), "max_size": table.max_size() }))?;
    Ok(vec![format!("Ĉ({d}) = {:.6} from sizes up to {}", table.c_hat(), table.max_size())])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(grid(2.0, 4, true), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(grid(1.0, 2, false), vec![0.5, 1.0]);
    }
}
