//! Monotone couplings driven by one Poisson field: a contact process below,
//! the stirring model in the middle and a Richardson model above, plus the
//! restarted lower process that stays inside the middle one.

use std::collections::BTreeSet;

use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::dynamics::{lifetime, Recording, Simulation, Trajectory};
use crate::error::{Error, Result};
use crate::randomness::{EventSource, LowerView, ModelKind, ModelParams, PoissonField, UpperView};
use crate::stats::{linear_fit, wilson, LinearFit};
use crate::topology::{l1_norm, Graph, LatticeBox, Point};

/// Three coupled trajectories sharing `source`.
#[derive(Clone, Debug)]
pub struct CoupledTriple<S, E> {
    pub source: E,
    pub lower: Trajectory<S>,
    pub middle: Trajectory<S>,
    pub upper: Trajectory<S>,
}

fn is_subset<S: Ord>(a: &[S], b: &[S]) -> bool {
    let b: BTreeSet<&S> = b.iter().collect();
    a.iter().all(|x| b.contains(x))
}

/// First event time at which `small ⊄ big`, comparing states after all
/// changes sharing a time stamp.
pub fn containment_violation<S: Copy + Ord + std::hash::Hash>(
    small: &Trajectory<S>,
    big: &Trajectory<S>,
) -> Result<Option<f64>> {
    let need = |t: &Trajectory<S>| {
        t.deltas
            .clone()
            .ok_or_else(|| Error::Unsupported("containment needs recorded state changes".into()))
    };
    let (ds, db) = (need(small)?, need(big)?);
    let mut sset: FxHashSet<S> = small.initial.iter().copied().collect();
    let mut bset: FxHashSet<S> = big.initial.iter().copied().collect();
    // number of sites in small but not in big
    let mut excess = sset.iter().filter(|x| !bset.contains(x)).count() as i64;
    if excess > 0 {
        return Ok(Some(small.start.min(big.start)));
    }
    let (mut i, mut j) = (0, 0);
    while i < ds.len() || j < db.len() {
        let t = match (ds.get(i), db.get(j)) {
            (Some(a), Some(b)) => a.time.min(b.time),
            (Some(a), None) => a.time,
            (None, Some(b)) => b.time,
            (None, None) => unreachable!(),
        };
        while i < ds.len() && ds[i].time == t {
            let d = ds[i];
            let before = sset.contains(&d.site) && !bset.contains(&d.site);
            if d.infected {
                sset.insert(d.site);
            } else {
                sset.remove(&d.site);
            }
            let after = sset.contains(&d.site) && !bset.contains(&d.site);
            excess += after as i64 - before as i64;
            i += 1;
        }
        while j < db.len() && db[j].time == t {
            let d = db[j];
            let before = sset.contains(&d.site) && !bset.contains(&d.site);
            if d.infected {
                bset.insert(d.site);
            } else {
                bset.remove(&d.site);
            }
            let after = sset.contains(&d.site) && !bset.contains(&d.site);
            excess += after as i64 - before as i64;
            j += 1;
        }
        if excess > 0 {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Runs the three coupled processes from `A ⊆ B ⊆ C` on one source and
/// verifies `η_t ⊆ ξ_t ⊆ ζ_t` at every event time.
pub fn coupled_run_on<G, E>(
    source: E,
    a: &[G::Site],
    b: &[G::Site],
    c: &[G::Site],
    up_to: f64,
) -> Result<CoupledTriple<G::Site, E>>
where
    G: Graph + Clone,
    E: EventSource<G> + Clone,
{
    if !is_subset(a, b) || !is_subset(b, c) {
        return Err(Error::Domain("initial sets must satisfy A ⊆ B ⊆ C".into()));
    }
    let lower = Simulation::new(&LowerView(&source), a).run(up_to)?;
    let middle = Simulation::new(&source, b).run(up_to)?;
    let upper = Simulation::new(&UpperView(&source), c).run(up_to)?;
    if let Some(t) = containment_violation(&lower, &middle)? {
        return Err(Error::Invariant(format!("lower process left the middle one at t={t}")));
    }
    if let Some(t) = containment_violation(&middle, &upper)? {
        return Err(Error::Invariant(format!("middle process left the upper one at t={t}")));
    }
    Ok(CoupledTriple { source, lower, middle, upper })
}

/// [`coupled_run_on`] with a freshly seeded field of a stirring model.
pub fn coupled_run<G: Graph + Clone>(
    graph: &G,
    a: &[G::Site],
    b: &[G::Site],
    c: &[G::Site],
    params: ModelParams,
    horizon: f64,
    seed: u64,
) -> Result<CoupledTriple<G::Site, PoissonField<G>>> {
    if !params.kind.stirs() {
        return Err(Error::Domain(format!("coupling needs a stirring model, got {}", params.kind)));
    }
    let field = PoissonField::new(graph, params, horizon, seed)?;
    coupled_run_on(field, a, b, c, horizon)
}

/// Why the restart procedure stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RestartEnd {
    /// The last restarted contact process was still alive at the horizon.
    LowerSurvived,
    /// The middle process died, so there was nowhere to restart from.
    MiddleDied,
}

#[derive(Clone, Debug)]
pub struct RestartRecord<S> {
    /// Restart times `u_0 = 0 < u_1 < …`.
    pub u: Vec<f64>,
    /// Restart points; `z_0` is the origin.
    pub z: Vec<S>,
    pub end: RestartEnd,
    /// True when the procedure was cut by the horizon rather than by death
    /// of the middle process.
    pub censored: bool,
    /// The restarted lower process.
    pub trajectory: Trajectory<S>,
}

impl<S> RestartRecord<S> {
    /// Index of the last restart.
    pub fn k(&self) -> usize {
        self.u.len() - 1
    }
}

/// Restarts the lower contact process from the smallest infected site of
/// the middle process each time it dies, and checks `η̄_t ⊆ ξ_t`.
pub fn restart_run<G, E>(triple: &CoupledTriple<G::Site, E>) -> Result<RestartRecord<G::Site>>
where
    G: Graph + Clone,
    E: EventSource<G>,
{
    let graph = triple.source.graph();
    let origin = graph.origin();
    if triple.middle.initial != [origin] {
        return Err(Error::Domain("restarts start from the middle process at the origin".into()));
    }
    let middle_deltas = triple
        .middle
        .deltas
        .as_ref()
        .ok_or_else(|| Error::Unsupported("restart needs recorded state changes".into()))?;
    let horizon = triple.middle.end;
    let lower = LowerView(&triple.source);

    let mut u = vec![0.0];
    let mut z = vec![origin];
    let mut deltas = Vec::new();
    let mut boundary_touched = false;
    let mut events = 0;
    let mut xi: BTreeSet<G::Site> = triple.middle.initial.iter().copied().collect();
    let mut cursor = 0;
    let (end, final_config, extinction) = loop {
        let (start, site) = (*u.last().unwrap(), *z.last().unwrap());
        let seg = Simulation::new(&lower, &[site])
            .start(start)
            .recording(Recording { deltas: true, hits: false, snapshots: vec![] })
            .run(horizon)?;
        boundary_touched |= seg.boundary_touched;
        events += seg.events_applied;
        deltas.extend(seg.deltas.into_iter().flatten());
        let Some(death) = seg.extinction else {
            break (RestartEnd::LowerSurvived, seg.final_config, None);
        };
        while cursor < middle_deltas.len() && middle_deltas[cursor].time <= death {
            let d = middle_deltas[cursor];
            if d.infected {
                xi.insert(d.site);
            } else {
                xi.remove(&d.site);
            }
            cursor += 1;
        }
        let Some(&next) = xi.first() else {
            break (RestartEnd::MiddleDied, Vec::new(), Some(death));
        };
        if death <= start {
            return Err(Error::Invariant("restart times must increase".into()));
        }
        deltas.push(crate::dynamics::Delta { time: death, site: next, infected: true });
        u.push(death);
        z.push(next);
    };
    let trajectory = Trajectory {
        start: 0.0,
        end: horizon,
        initial: vec![origin],
        deltas: Some(deltas),
        hits: None,
        snapshots: Vec::new(),
        final_config,
        extinction,
        boundary_touched,
        events_applied: events,
        halt: crate::dynamics::Halt::Reached,
    };
    if let Some(t) = containment_violation(&trajectory, &triple.middle)? {
        return Err(Error::Invariant(format!("restarted process left the middle one at t={t}")));
    }
    Ok(RestartRecord { u, z, censored: end == RestartEnd::LowerSurvived, end, trajectory })
}

/// Which member of the coupled triple an estimator samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Lower,
    Middle,
    Upper,
}

#[derive(Clone, Debug)]
pub struct TailOptions {
    pub times: Vec<f64>,
    /// Linear speed bound in the reach estimator.
    pub m1: f64,
    /// Inverse speed bound in the hitting-time estimator.
    pub m2: f64,
    /// Sites at which hitting-time tails are estimated.
    pub targets: Vec<Point>,
    pub horizon: f64,
    pub replicas: u64,
    pub seed: u64,
    pub component: Component,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailPoint {
    pub t: f64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: u64,
    pub censored: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailCurve {
    pub label: String,
    pub points: Vec<TailPoint>,
    /// Least-squares slope of `ln p̂` against `t` over points with `p̂ > 0`.
    pub fit: Option<LinearFit>,
}

impl TailCurve {
    fn new(label: String, points: Vec<TailPoint>) -> Self {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.p_hat > 0.0)
            .map(|p| (p.t, p.p_hat.ln()))
            .unzip();
        let fit = linear_fit(&xs, &ys).ok();
        TailCurve { label, points, fit }
    }

    /// Slope negative at 95% confidence.
    pub fn decays(&self) -> bool {
        self.fit.is_some_and(|f| f.slope + 1.96 * f.slope_se < 0.0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailReport {
    /// `P(∃y: t(y) ≤ t, |y|₁ ≥ M₁ t)`.
    pub reach: TailCurve,
    /// `P(t < τ ≤ horizon)`.
    pub late_death: TailCurve,
    /// `P(t(x) > M₂|x|₁ + t, τ > horizon)`, one curve per target.
    pub slow_hit: Vec<TailCurve>,
}

struct TailSample {
    reach: Vec<u32>,
    lifetime: Option<f64>,
    hits: Vec<Option<f64>>,
}

/// Monte Carlo estimates of the growth-control tails from the origin.
pub fn growth_tail_estimates(graph: &LatticeBox, params: ModelParams, opts: &TailOptions) -> Result<TailReport> {
    if opts.replicas < 100 {
        return Err(Error::Statistics(format!("at least 100 replicas needed, got {}", opts.replicas)));
    }
    if params.kind != ModelKind::RMS && params.kind != ModelKind::CPS {
        return Err(Error::Domain("tail estimates are run on a stirring model's coupling".into()));
    }
    let samples: Vec<TailSample> = (0..opts.replicas)
        .into_par_iter()
        .map(|i| -> Result<TailSample> {
            let field = PoissonField::new(graph, params, opts.horizon, opts.seed + i)?;
            let init = [Point::origin()];
            let rec = Recording { deltas: false, hits: true, snapshots: vec![] };
            let traj = match opts.component {
                Component::Lower => Simulation::new(&LowerView(&field), &init).recording(rec).run(opts.horizon)?,
                Component::Middle => Simulation::new(&field, &init).recording(rec).run(opts.horizon)?,
                Component::Upper => Simulation::new(&UpperView(&field), &init).recording(rec).run(opts.horizon)?,
            };
            let hits = traj.hits.as_ref().expect("recorded");
            let reach = opts
                .times
                .iter()
                .map(|&t| hits.iter().filter(|(_, &h)| h <= t).map(|(y, _)| l1_norm(y)).max().unwrap_or(0))
                .collect();
            Ok(TailSample {
                reach,
                lifetime: lifetime(&traj).time(),
                hits: opts.targets.iter().map(|x| hits.get(x).copied()).collect(),
            })
        })
        .collect::<Result<_>>()?;

    let n = samples.len() as u64;
    let point = |t: f64, k: u64, n: u64, censored: u64| {
        let p = wilson(k, n, 1.96);
        TailPoint { t, p_hat: p.p_hat, ci_lo: p.ci_lo, ci_hi: p.ci_hi, n, censored }
    };
    let survived = samples.iter().filter(|s| s.lifetime.is_none()).count() as u64;

    let reach = opts
        .times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let k = samples.iter().filter(|s| s.reach[j] as f64 >= opts.m1 * t).count() as u64;
            point(t, k, n, 0)
        })
        .collect();
    let late_death = opts
        .times
        .iter()
        .map(|&t| {
            let k = samples.iter().filter(|s| s.lifetime.is_some_and(|d| d > t)).count() as u64;
            point(t, k, n, survived)
        })
        .collect();
    let slow_hit = opts
        .targets
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let pts = opts
                .times
                .iter()
                .filter(|&&t| opts.m2 * l1_norm(x) as f64 + t < opts.horizon)
                .map(|&t| {
                    let s = opts.m2 * l1_norm(x) as f64 + t;
                    let k = samples
                        .iter()
                        .filter(|r| r.lifetime.is_none() && r.hits[j].is_none_or(|h| h > s))
                        .count() as u64;
                    let censored = samples.iter().filter(|r| r.hits[j].is_none()).count() as u64;
                    point(t, k, n, censored)
                })
                .collect();
            TailCurve::new(format!("slow_hit{x:?}"), pts)
        })
        .collect();
    Ok(TailReport {
        reach: TailCurve::new("reach".into(), reach),
        late_death: TailCurve::new("late_death".into(), late_death),
        slow_hit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::EventLog;

    #[test]
    fn triple_contains_and_restart_contains() {
        let g = LatticeBox::new(2, 8).unwrap();
        let o = [Point::origin()];
        for seed in 0..30 {
            let t = coupled_run(&g, &o, &o, &o, ModelParams::cps(2.0, 1.0, 1.0), 3.0, seed).unwrap();
            let r = restart_run(&t).unwrap();
            assert_eq!(r.u[0], 0.0);
            assert!(r.u.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(r.u.len(), r.z.len());
        }
    }

    #[test]
    fn rejects_non_nested_initials() {
        let g = LatticeBox::new(2, 4).unwrap();
        let a = [Point::new(&[1, 0])];
        let b = [Point::origin()];
        assert!(coupled_run(&g, &a, &b, &b, ModelParams::rms(1.0), 1.0, 0).is_err());
    }

    #[test]
    fn empty_lower_is_trivial() {
        let g = LatticeBox::new(2, 4).unwrap();
        let o = [Point::origin()];
        let t = coupled_run(&g, &[], &o, &o, ModelParams::rms(1.0), 2.0, 3).unwrap();
        assert!(t.lower.final_config.is_empty());
        assert!(t.lower.deltas.as_ref().unwrap().is_empty());
    }

    #[test]
    fn surviving_first_attempt_gives_lower_process() {
        // no stirring or healing: the lower process never dies
        let g = LatticeBox::new(1, 3).unwrap();
        let log = EventLog::from_events(&g, 2.0, vec![]).unwrap();
        let o = [Point::origin()];
        let t = coupled_run_on(log, &o, &o, &o, 2.0).unwrap();
        let r = restart_run(&t).unwrap();
        assert_eq!(r.k(), 0);
        assert!(r.censored);
        assert_eq!(r.trajectory.final_config, t.lower.final_config);
    }

    #[test]
    fn tail_estimator_guards_and_boundary_case() {
        let g = LatticeBox::new(2, 10).unwrap();
        let mut opts = TailOptions {
            times: vec![0.0, 0.5, 1.0],
            m1: 4.0,
            m2: 1.0,
            targets: vec![Point::new(&[1, 0])],
            horizon: 2.0,
            replicas: 10,
            seed: 1,
            component: Component::Middle,
        };
        assert!(matches!(
            growth_tail_estimates(&g, ModelParams::rms(1.0), &opts),
            Err(Error::Statistics(_))
        ));
        opts.replicas = 100;
        let rep = growth_tail_estimates(&g, ModelParams::rms(1.0), &opts).unwrap();
        assert_eq!(rep.reach.points[0].p_hat, 1.0);
        assert!(rep.late_death.points.iter().all(|p| p.p_hat == 0.0));
    }
}
