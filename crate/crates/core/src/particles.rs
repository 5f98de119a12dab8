//! Labelled particles carried by the stirring model on the lattice.
//!
//! Every site starts with one particle carrying its label. A particle is
//! infected once an infection arrow hits the site it occupies, and from then
//! on it stays infected. Particles move only when a stirring arrow actually
//! moves an infection: the two particles at the endpoints swap. Thus the
//! site configuration is always the set of positions of infected particles.

use std::ops::ControlFlow;

use rayon::prelude::*;
use crate::dynamics::{Applied, CensoredTime, InfectedSet, Observer, Recording, Simulation, Trajectory};
use crate::error::{Error, Result};
use crate::randomness::{EventSource, ModelKind, ModelParams, PoissonField, Stream, StreamKind};
use crate::stats::{wilson, Proportion};
use crate::topology::{Graph, LatticeBox, Point};

/// A particle swap caused by a stirring arrow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Move {
    pub time: f64,
    /// The particle that was at the arrow's source.
    pub a: u32,
    /// The particle that was at the arrow's target.
    pub b: u32,
}

/// The bijection between particle labels and sites. Labels are dense site
/// indices of the starting positions.
#[derive(Clone, Debug)]
pub struct ParticleMap {
    graph: LatticeBox,
    position: Vec<u32>,
    occupant: Vec<u32>,
    infected: Vec<bool>,
}

impl ParticleMap {
    pub fn new(graph: &LatticeBox, initial: &[Point]) -> Self {
        let n = graph.dense_len().expect("lattice boxes are dense");
        let mut infected = vec![false; n];
        for &x in initial {
            infected[graph.dense_index(x)] = true;
        }
        ParticleMap {
            graph: graph.clone(),
            position: (0..n as u32).collect(),
            occupant: (0..n as u32).collect(),
            infected,
        }
    }

    pub fn label(&self, x: Point) -> u32 {
        self.graph.dense_index(x) as u32
    }

    pub fn position(&self, a: u32) -> Point {
        self.graph.site_at(self.position[a as usize] as usize)
    }

    pub fn occupant(&self, x: Point) -> u32 {
        self.occupant[self.graph.dense_index(x)]
    }

    pub fn is_infected(&self, a: u32) -> bool {
        self.infected[a as usize]
    }

    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }

    /// Sites occupied by infected particles, sorted.
    pub fn infected_sites(&self) -> Vec<Point> {
        let mut v: Vec<Point> = (0..self.len() as u32)
            .filter(|&a| self.infected[a as usize])
            .map(|a| self.position(a))
            .collect();
        v.sort();
        v
    }

    fn swap(&mut self, x: Point, y: Point) -> (u32, u32) {
        let (ix, iy) = (self.graph.dense_index(x), self.graph.dense_index(y));
        let (a, b) = (self.occupant[ix], self.occupant[iy]);
        self.occupant.swap(ix, iy);
        self.position[a as usize] = iy as u32;
        self.position[b as usize] = ix as u32;
        (a, b)
    }

    /// Positions form a permutation and each site's state matches its
    /// particle's status.
    pub fn check_all(&self, state: &InfectedSet<LatticeBox>) -> Result<()> {
        for (site, &a) in self.occupant.iter().enumerate() {
            if self.position[a as usize] as usize != site {
                return Err(Error::Invariant(format!("particle {a} is not where site {site} says")));
            }
            let x = self.graph.site_at(site);
            if state.contains(x) != self.infected[a as usize] {
                return Err(Error::Invariant(format!(
                    "site {x:?} and its particle {a} disagree on the infection state"
                )));
            }
        }
        Ok(())
    }
}

/// Sparse record of a particle run.
#[derive(Clone, Debug)]
pub struct ParticleHistory {
    graph: LatticeBox,
    pub initially_infected: Vec<bool>,
    pub moves: Vec<Move>,
    pub infection_time: Vec<Option<f64>>,
    pub end: f64,
}

impl ParticleHistory {
    /// Replays the swaps up to time `t` (inclusive).
    pub fn position_at(&self, a: u32, t: f64) -> Point {
        // site_of[label] = dense site index
        let mut site_of: Vec<u32> = (0..self.graph.dense_len().unwrap_or(0) as u32).collect();
        for m in self.moves.iter().take_while(|m| m.time <= t) {
            site_of.swap(m.a as usize, m.b as usize);
        }
        self.graph.site_at(site_of[a as usize] as usize)
    }
}

/// First time particle `a` sits at `x` while healthy.
pub fn reach_time(history: &ParticleHistory, a: u32, x: Point) -> CensoredTime {
    let censored = CensoredTime::Censored(history.end);
    if history.initially_infected[a as usize] {
        return censored;
    }
    let target = history.graph.dense_index(x) as u32;
    let infected_at = history.infection_time[a as usize].unwrap_or(f64::INFINITY);
    if a == target {
        return CensoredTime::At(0.0);
    }
    // replay every swap; cheap compared to the run that produced them
    let mut site_of: Vec<u32> = (0..history.graph.dense_len().unwrap_or(0) as u32).collect();
    for m in &history.moves {
        if m.time >= infected_at {
            break;
        }
        site_of.swap(m.a as usize, m.b as usize);
        if (m.a == a || m.b == a) && site_of[a as usize] == target {
            return CensoredTime::At(m.time);
        }
    }
    censored
}

struct Tracker {
    map: ParticleMap,
    moves: Option<Vec<Move>>,
    infection_time: Vec<Option<f64>>,
    full_checks: bool,
    error: Option<Error>,
}

impl Tracker {
    fn step(&mut self, ev: &Applied<'_, Point>, state: &InfectedSet<LatticeBox>) -> Result<()> {
        match ev.stream.kind {
            StreamKind::Infection => {
                let a = self.map.occupant(ev.target);
                if self.map.infected[a as usize] {
                    return Err(Error::Invariant(format!("infection of already infected particle {a}")));
                }
                self.map.infected[a as usize] = true;
                self.infection_time[a as usize] = Some(ev.time);
            }
            StreamKind::Stirring => {
                let (a, b) = self.map.swap(ev.stream.site, ev.target);
                if let Some(m) = &mut self.moves {
                    m.push(Move { time: ev.time, a, b });
                }
            }
            StreamKind::Healing => {
                return Err(Error::Domain("particle dynamics are defined for models without healing".into()));
            }
        }
        for c in ev.changes {
            let a = self.map.occupant(c.site);
            if self.map.position(a) != c.site {
                return Err(Error::Invariant("particle positions are not a partition".into()));
            }
            if self.map.is_infected(a) != c.infected || state.contains(c.site) != c.infected {
                return Err(Error::Invariant(format!("site {:?} disagrees with particle {a}", c.site)));
            }
        }
        if self.full_checks {
            self.map.check_all(state)?;
        }
        Ok(())
    }
}

impl Observer<LatticeBox> for Tracker {
    fn on_event(&mut self, ev: &Applied<'_, Point>, state: &InfectedSet<LatticeBox>) -> ControlFlow<()> {
        match self.step(ev, state) {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                self.error = Some(e);
                ControlFlow::Break(())
            }
        }
    }
}

/// Runs the stirring dynamics and the particle system together. With
/// `full_checks` the whole map is compared with the site configuration after
/// every event; otherwise only the sites that changed.
pub fn evolve_particles<E: EventSource<LatticeBox>>(
    initial: &[Point],
    source: &E,
    up_to: f64,
    full_checks: bool,
) -> Result<(Trajectory<Point>, ParticleHistory)> {
    let graph = source.graph().clone();
    let mut tracker = Tracker {
        map: ParticleMap::new(&graph, initial),
        moves: Some(Vec::new()),
        infection_time: vec![None; graph.dense_len().unwrap_or(0)],
        full_checks,
        error: None,
    };
    let initially_infected = tracker.map.infected.clone();
    let traj = Simulation::new(source, initial).run_observed(up_to, &mut tracker)?;
    if let Some(e) = tracker.error {
        return Err(e);
    }
    if tracker.map.infected_sites() != traj.final_config {
        return Err(Error::Invariant("particle configuration differs from the site dynamics".into()));
    }
    let history = ParticleHistory {
        graph,
        initially_infected,
        moves: tracker.moves.unwrap_or_default(),
        infection_time: tracker.infection_time,
        end: traj.end,
    };
    Ok((traj, history))
}

/// Reach times `ι_a^x` for several particles at once, stopping the run as
/// soon as every tracked particle has either reached `x` or been infected.
pub fn reach_times<E: EventSource<LatticeBox>>(
    initial: &[Point],
    source: &E,
    particles: &[Point],
    x: Point,
    up_to: f64,
) -> Result<Vec<CensoredTime>> {
    struct Watch {
        tracker: Tracker,
        labels: Vec<u32>,
        target: Point,
        result: Vec<Option<CensoredTime>>,
    }
    impl Observer<LatticeBox> for Watch {
        fn on_event(&mut self, ev: &Applied<'_, Point>, state: &InfectedSet<LatticeBox>) -> ControlFlow<()> {
            self.tracker.on_event(ev, state)?;
            for (i, &a) in self.labels.iter().enumerate() {
                if self.result[i].is_some() {
                    continue;
                }
                if self.tracker.map.is_infected(a) {
                    self.result[i] = Some(CensoredTime::Censored(ev.time));
                } else if self.tracker.map.position(a) == self.target {
                    self.result[i] = Some(CensoredTime::At(ev.time));
                }
            }
            if self.result.iter().all(Option::is_some) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        }
    }
    let graph = source.graph().clone();
    let map = ParticleMap::new(&graph, initial);
    let labels: Vec<u32> = particles.iter().map(|&p| map.label(p)).collect();
    let result = labels
        .iter()
        .map(|&a| {
            if map.is_infected(a) {
                Some(CensoredTime::Censored(0.0))
            } else if map.position(a) == x {
                Some(CensoredTime::At(0.0))
            } else {
                None
            }
        })
        .collect();
    let mut watch = Watch {
        tracker: Tracker {
            map,
            moves: None,
            infection_time: vec![None; graph.dense_len().unwrap_or(0)],
            full_checks: false,
            error: None,
        },
        labels,
        target: x,
        result,
    };
    let traj = Simulation::new(source, initial)
        .recording(Recording::none())
        .run_observed(up_to, &mut watch)?;
    if let Some(e) = watch.tracker.error {
        return Err(e);
    }
    Ok(watch
        .result
        .into_iter()
        .map(|r| r.unwrap_or(CensoredTime::Censored(traj.end)))
        .collect())
}

/// The walk that follows every stirring arrow leaving its current site,
/// whatever the states. Returns the jump times and positions, starting with
/// `(0, start)`.
pub fn free_stirring_walk<E: EventSource<LatticeBox>>(source: &E, start: Point, up_to: f64) -> Result<Vec<(f64, Point)>> {
    let graph = source.graph();
    if !graph.contains(start) {
        return Err(Error::Domain(format!("start {start:?} outside the box")));
    }
    let mut path = vec![(0.0, start)];
    let (mut t, mut x) = (0.0, start);
    loop {
        let next = (0..graph.slots())
            .filter_map(|s| source.next_after(Stream::stirring(x, s), t).map(|time| (time, s)))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match next {
            Some((time, slot)) if time <= up_to => {
                x = graph.neighbor(x, slot).expect("arrows stay in the window");
                t = time;
                path.push((t, x));
            }
            _ => break,
        }
    }
    Ok(path)
}

/// Per-site outcome of one fixation replica.
#[derive(Clone, Debug)]
pub struct SiteFixation {
    pub site: Point,
    pub last_change: Option<f64>,
    pub final_state: bool,
}

#[derive(Clone, Debug)]
pub struct ReplicaFixation {
    pub seed: u64,
    pub sites: Vec<SiteFixation>,
    pub fixed_infected: bool,
    pub fixed_healthy: bool,
    /// A healthy core site next to a site infected through the whole margin.
    pub inconsistent: bool,
}

#[derive(Clone, Debug)]
pub struct FixationReport {
    pub horizon: f64,
    pub margin: f64,
    pub core_radius: u32,
    pub replicas: Vec<ReplicaFixation>,
    pub fixed_infected: Proportion,
    pub fixed_healthy: Proportion,
    pub inconsistent: u64,
}

#[derive(Clone, Debug)]
pub struct FixationOptions {
    pub initial: Vec<Point>,
    pub core_radius: u32,
    pub horizon: f64,
    /// Defaults to a quarter of the horizon when `None`.
    pub margin: Option<f64>,
    pub replicas: u64,
    pub seed: u64,
}

/// Runs replicas of the stirring model and records, for every core site,
/// its last state change and final state.
pub fn fixation_experiment(graph: &LatticeBox, params: ModelParams, opts: &FixationOptions) -> Result<FixationReport> {
    if params.kind != ModelKind::RMS {
        return Err(Error::Domain("fixation is studied for the stirring Richardson model".into()));
    }
    if opts.core_radius > graph.radius() {
        return Err(Error::Domain("core window exceeds the box".into()));
    }
    let margin = opts.margin.unwrap_or(0.25 * opts.horizon);
    if !(margin >= 0.0 && margin <= opts.horizon) {
        return Err(Error::Domain(format!("margin {margin} outside [0, horizon]")));
    }
    let core: Vec<Point> = graph
        .sites()
        .into_iter()
        .filter(|p| p.max_norm() as u32 <= opts.core_radius)
        .collect();
    let cutoff = opts.horizon - margin;

    let replicas: Vec<ReplicaFixation> = (0..opts.replicas)
        .into_par_iter()
        .map(|i| -> Result<ReplicaFixation> {
            let seed = opts.seed + i;
            let field = PoissonField::new(graph, params, opts.horizon, seed)?;
            let n = graph.dense_len().unwrap_or(0);
            let mut last: Vec<Option<f64>> = vec![None; n];
            let r = opts.core_radius as i32;
            let mut obs = crate::dynamics::FnObserver(|ev: &Applied<'_, Point>, _: &InfectedSet<LatticeBox>| {
                for c in ev.changes {
                    if c.site.max_norm() <= r + 1 {
                        last[graph.dense_index(c.site)] = Some(ev.time);
                    }
                }
                ControlFlow::Continue(())
            });
            let traj = Simulation::new(&field, &opts.initial)
                .recording(Recording::none())
                .run_observed(opts.horizon, &mut obs)?;
            let infected: std::collections::BTreeSet<Point> = traj.final_config.iter().copied().collect();
            let sites: Vec<SiteFixation> = core
                .iter()
                .map(|&x| SiteFixation {
                    site: x,
                    last_change: last[graph.dense_index(x)],
                    final_state: infected.contains(&x),
                })
                .collect();
            let quiet = |s: &SiteFixation| s.last_change.is_none_or(|t| t < cutoff);
            let fixed_infected = sites.iter().all(|s| s.final_state && quiet(s));
            let fixed_healthy = sites.iter().all(|s| !s.final_state && quiet(s));
            let stays_infected = |y: Point| infected.contains(&y) && last[graph.dense_index(y)].is_none_or(|t| t < cutoff);
            let inconsistent = sites.iter().any(|s| {
                !s.final_state && graph.neighbors_of(s.site).into_iter().any(stays_infected)
            });
            Ok(ReplicaFixation { seed, sites, fixed_infected: fixed_infected && !inconsistent, fixed_healthy, inconsistent })
        })
        .collect::<Result<_>>()?;
    let n = replicas.len() as u64;
    let count = |f: fn(&ReplicaFixation) -> bool| replicas.iter().filter(|r| f(r)).count() as u64;
    Ok(FixationReport {
        horizon: opts.horizon,
        margin,
        core_radius: opts.core_radius,
        fixed_infected: wilson(count(|r| r.fixed_infected), n, 1.96),
        fixed_healthy: wilson(count(|r| r.fixed_healthy), n, 1.96),
        inconsistent: count(|r| r.inconsistent),
        replicas,
    })
}
