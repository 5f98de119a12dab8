//! Event-driven evolution of a configuration through a graphical
//! construction.
//!
//! Only streams that can change the configuration are scheduled: an arrow
//! `(x, y)` is armed while `x` is infected and `y` healthy, a healing mark
//! while its site is infected. Every state change re-arms the streams
//! touching the changed site, so the cost per event is `O(degree · log n)`
//! regardless of the window size.
//!
//! A stirring arrow `(x, y)` moves the infection from `x` to `y` when `x` is
//! infected and `y` healthy, and does nothing otherwise. This is the
//! open-path rule of the graphical construction (a path is forced along a
//! stirring arrow whose endpoint is healthy and cannot take one whose
//! endpoint is infected). [`StirringRule::Exchange`] instead swaps the two
//! states on every stirring arrow, which makes the dynamics additive.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::ops::ControlFlow;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::randomness::{EventSource, Stream, StreamKind};
use crate::topology::{Graph, LatticeBox, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StirringRule {
    /// The arrow `(x, y)` acts only when `x` is infected and `y` healthy.
    #[default]
    Oriented,
    /// The arrow exchanges the states of its endpoints unconditionally.
    Exchange,
}

/// A time that may lie beyond the observation window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CensoredTime {
    At(f64),
    /// Not observed up to the given time.
    Censored(f64),
}

impl CensoredTime {
    pub fn time(self) -> Option<f64> {
        match self {
            CensoredTime::At(t) => Some(t),
            CensoredTime::Censored(_) => None,
        }
    }

    /// The observed time, or the censoring time.
    pub fn value(self) -> f64 {
        match self {
            CensoredTime::At(t) | CensoredTime::Censored(t) => t,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, CensoredTime::Censored(_))
    }

    /// True when the time is observed and `≤ t`.
    pub fn le(self, t: f64) -> bool {
        matches!(self, CensoredTime::At(s) if s <= t)
    }
}

/// One site flipping state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Change<S> {
    pub site: S,
    pub infected: bool,
}

/// A state change recorded in a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Delta<S> {
    pub time: f64,
    pub site: S,
    pub infected: bool,
}

/// An event that changed the configuration, as seen by observers.
#[derive(Clone, Debug)]
pub struct Applied<'a, S> {
    pub time: f64,
    pub stream: Stream<S>,
    /// Target of the arrow, or the site of a healing mark.
    pub target: S,
    pub changes: &'a [Change<S>],
}

/// The current infected set, with O(1) membership and removal.
#[derive(Clone, Debug)]
pub struct InfectedSet<G: Graph> {
    graph: G,
    members: Vec<G::Site>,
    index: SlotIndex<G::Site>,
}

#[derive(Clone, Debug)]
enum SlotIndex<S> {
    Dense(Vec<u32>),
    Sparse(FxHashMap<S, u32>),
}

const ABSENT: u32 = u32::MAX;

impl<G: Graph + Clone> InfectedSet<G> {
    pub fn new(graph: &G) -> Self {
        let index = match graph.dense_len() {
            Some(n) => SlotIndex::Dense(vec![ABSENT; n]),
            None => SlotIndex::Sparse(FxHashMap::default()),
        };
        InfectedSet { graph: graph.clone(), members: Vec::new(), index }
    }

    fn position(&self, x: G::Site) -> Option<usize> {
        match &self.index {
            SlotIndex::Dense(v) => {
                let p = v[self.graph.dense_index(x)];
                (p != ABSENT).then_some(p as usize)
            }
            SlotIndex::Sparse(m) => m.get(&x).map(|&p| p as usize),
        }
    }

    fn set_position(&mut self, x: G::Site, p: u32) {
        match &mut self.index {
            SlotIndex::Dense(v) => v[self.graph.dense_index(x)] = p,
            SlotIndex::Sparse(m) => {
                if p == ABSENT {
                    m.remove(&x);
                } else {
                    m.insert(x, p);
                }
            }
        }
    }

    pub fn contains(&self, x: G::Site) -> bool {
        self.position(x).is_some()
    }

    /// Returns false if `x` was already present.
    pub fn insert(&mut self, x: G::Site) -> bool {
        if self.contains(x) {
            return false;
        }
        self.set_position(x, self.members.len() as u32);
        self.members.push(x);
        true
    }

    /// Returns false if `x` was absent.
    pub fn remove(&mut self, x: G::Site) -> bool {
        let Some(p) = self.position(x) else {
            return false;
        };
        self.members.swap_remove(p);
        if let Some(&moved) = self.members.get(p) {
            self.set_position(moved, p as u32);
        }
        self.set_position(x, ABSENT);
        true
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members in unspecified order.
    pub fn iter(&self) -> impl Iterator<Item = G::Site> + '_ {
        self.members.iter().copied()
    }

    pub fn sorted(&self) -> Vec<G::Site> {
        let mut v = self.members.clone();
        v.sort();
        v
    }

    pub fn graph(&self) -> &G {
        &self.graph
    }
}

/// Callback invoked after every event that changed the configuration.
pub trait Observer<G: Graph> {
    fn on_event(&mut self, event: &Applied<'_, G::Site>, state: &InfectedSet<G>) -> ControlFlow<()>;
}

impl<G: Graph> Observer<G> for () {
    fn on_event(&mut self, _: &Applied<'_, G::Site>, _: &InfectedSet<G>) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }
}

impl<G: Graph, A: Observer<G>, B: Observer<G>> Observer<G> for (A, B) {
    fn on_event(&mut self, event: &Applied<'_, G::Site>, state: &InfectedSet<G>) -> ControlFlow<()> {
        self.0.on_event(event, state)?;
        self.1.on_event(event, state)
    }
}

impl<G: Graph, O: Observer<G> + ?Sized> Observer<G> for &mut O {
    fn on_event(&mut self, event: &Applied<'_, G::Site>, state: &InfectedSet<G>) -> ControlFlow<()> {
        (**self).on_event(event, state)
    }
}

/// Adapts a closure into an [`Observer`].
pub struct FnObserver<F>(pub F);

impl<G: Graph, F> Observer<G> for FnObserver<F>
where
    F: FnMut(&Applied<'_, G::Site>, &InfectedSet<G>) -> ControlFlow<()>,
{
    fn on_event(&mut self, event: &Applied<'_, G::Site>, state: &InfectedSet<G>) -> ControlFlow<()> {
        (self.0)(event, state)
    }
}

#[derive(Clone, Copy, Debug)]
struct Pending<S> {
    time: f64,
    stream: Stream<S>,
}

impl<S: Ord> PartialEq for Pending<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<S: Ord> Eq for Pending<S> {}
impl<S: Ord> PartialOrd for Pending<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Ord> Ord for Pending<S> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.stream.cmp(&self.stream))
    }
}

/// How a call to [`Engine::run_until`] ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Halt {
    /// All events up to the requested time were processed.
    Reached,
    /// An observer asked to stop.
    Stopped,
    /// The population cap was exceeded.
    Capped,
}

/// The simulation state machine. Most callers want [`Simulation`].
pub struct Engine<'s, G: Graph, E> {
    source: &'s E,
    graph: G,
    rule: StirringRule,
    state: InfectedSet<G>,
    heap: BinaryHeap<Pending<G::Site>>,
    scheduled: FxHashSet<Stream<G::Site>>,
    now: f64,
    extinction: Option<f64>,
    boundary_touched: bool,
    events_applied: u64,
    max_infected: usize,
    changes: Vec<Change<G::Site>>,
}

impl<'s, G: Graph + Clone, E: EventSource<G>> Engine<'s, G, E> {
    pub fn new(source: &'s E, rule: StirringRule, start: f64, initial: &[G::Site]) -> Result<Self> {
        let graph = source.graph().clone();
        if !(start >= 0.0 && start <= source.horizon()) {
            return Err(Error::Domain(format!(
                "start time {start} outside [0, {}]",
                source.horizon()
            )));
        }
        let mut state = InfectedSet::new(&graph);
        let mut boundary_touched = false;
        for &x in initial {
            if !graph.contains(x) {
                return Err(Error::Domain(format!("initial site {x:?} outside the topology")));
            }
            state.insert(x);
            boundary_touched |= graph.is_boundary(x);
        }
        let mut engine = Engine {
            source,
            graph,
            rule,
            extinction: state.is_empty().then_some(start),
            state,
            heap: BinaryHeap::new(),
            scheduled: FxHashSet::default(),
            now: start,
            boundary_touched,
            events_applied: 0,
            max_infected: usize::MAX,
            changes: Vec::with_capacity(2),
        };
        let members: Vec<_> = engine.state.iter().collect();
        for x in members {
            engine.arm_around(x);
        }
        Ok(engine)
    }

    /// Stop with [`Halt::Capped`] once more than `cap` sites are infected.
    pub fn set_max_infected(&mut self, cap: usize) {
        self.max_infected = cap;
    }

    pub fn state(&self) -> &InfectedSet<G> {
        &self.state
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn extinction(&self) -> Option<f64> {
        self.extinction
    }

    pub fn boundary_touched(&self) -> bool {
        self.boundary_touched
    }

    pub fn events_applied(&self) -> u64 {
        self.events_applied
    }

    fn target(&self, s: &Stream<G::Site>) -> G::Site {
        match s.kind {
            StreamKind::Healing => s.site,
            _ => self
                .graph
                .neighbor(s.site, s.slot as usize)
                .expect("armed arrows stay inside the window"),
        }
    }

    fn relevant(&self, s: &Stream<G::Site>) -> bool {
        match s.kind {
            StreamKind::Healing => self.state.contains(s.site),
            StreamKind::Infection => self.state.contains(s.site) && !self.state.contains(self.target(s)),
            StreamKind::Stirring => {
                let x = self.state.contains(s.site);
                let y = self.state.contains(self.target(s));
                match self.rule {
                    StirringRule::Oriented => x && !y,
                    StirringRule::Exchange => x != y,
                }
            }
        }
    }

    fn arm(&mut self, s: Stream<G::Site>) {
        if self.scheduled.contains(&s) || !self.relevant(&s) {
            return;
        }
        if let Some(time) = self.source.next_after(s, self.now) {
            self.heap.push(Pending { time, stream: s });
            self.scheduled.insert(s);
        }
    }

    /// Arms every stream whose relevance may depend on the state of `z`.
    fn arm_around(&mut self, z: G::Site) {
        self.arm(Stream::healing(z));
        for slot in 0..self.graph.slots() {
            let Some(y) = self.graph.neighbor(z, slot) else {
                continue;
            };
            let back = self.graph.reverse_slot(z, slot);
            self.arm(Stream::infection(z, slot));
            self.arm(Stream::stirring(z, slot));
            self.arm(Stream::infection(y, back));
            self.arm(Stream::stirring(y, back));
        }
    }

    fn set(&mut self, x: G::Site, infected: bool) {
        if infected {
            self.state.insert(x);
            self.boundary_touched |= self.graph.is_boundary(x);
        } else {
            self.state.remove(x);
        }
        self.changes.push(Change { site: x, infected });
    }

    /// Processes every event with time `≤ up_to` (clamped to the horizon).
    pub fn run_until<O: Observer<G>>(&mut self, up_to: f64, observer: &mut O) -> Result<Halt> {
        let up_to = up_to.min(self.source.horizon());
        while let Some(top) = self.heap.peek() {
            if top.time > up_to {
                break;
            }
            let Pending { time, stream } = self.heap.pop().expect("peeked");
            self.scheduled.remove(&stream);
            self.now = time;
            let target = self.target(&stream);
            self.changes.clear();
            let x_inf = self.state.contains(stream.site);
            let y_inf = self.state.contains(target);
            match stream.kind {
                StreamKind::Infection => {
                    if x_inf && !y_inf {
                        self.set(target, true);
                    }
                }
                StreamKind::Healing => {
                    if x_inf {
                        self.set(target, false);
                    }
                }
                StreamKind::Stirring => {
                    let act = match self.rule {
                        StirringRule::Oriented => x_inf && !y_inf,
                        StirringRule::Exchange => x_inf != y_inf,
                    };
                    if act {
                        self.set(stream.site, y_inf);
                        self.set(target, x_inf);
                    }
                }
            }
            let changes = std::mem::take(&mut self.changes);
            for c in &changes {
                self.arm_around(c.site);
            }
            // the popped stream itself, if still relevant and not re-armed above
            self.arm(stream);
            let mut flow = ControlFlow::Continue(());
            if !changes.is_empty() {
                self.events_applied += 1;
                if self.state.is_empty() && self.extinction.is_none() {
                    self.extinction = Some(time);
                }
                let applied = Applied { time, stream, target, changes: &changes };
                flow = observer.on_event(&applied, &self.state);
            }
            self.changes = changes;
            if flow.is_break() {
                return Ok(Halt::Stopped);
            }
            if self.state.len() > self.max_infected {
                return Ok(Halt::Capped);
            }
        }
        self.now = self.now.max(up_to);
        Ok(Halt::Reached)
    }
}

/// What a [`Simulation`] keeps.
#[derive(Clone, Debug, Default)]
pub struct Recording {
    /// Every state change (needed for replay at arbitrary times).
    pub deltas: bool,
    /// First infection time of every site.
    pub hits: bool,
    /// Configurations stored at these times.
    pub snapshots: Vec<f64>,
}

impl Recording {
    pub fn full() -> Self {
        Recording { deltas: true, hits: true, snapshots: Vec::new() }
    }

    pub fn none() -> Self {
        Recording::default()
    }
}

/// A run of the dynamics and whatever was recorded about it.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub start: f64,
    /// Time up to which the run is complete.
    pub end: f64,
    pub initial: Vec<S>,
    pub deltas: Option<Vec<Delta<S>>>,
    pub hits: Option<FxHashMap<S, f64>>,
    pub snapshots: Vec<(f64, Vec<S>)>,
    pub final_config: Vec<S>,
    pub extinction: Option<f64>,
    pub boundary_touched: bool,
    pub events_applied: u64,
    pub halt: Halt,
}

struct Recorder<S> {
    deltas: Option<Vec<Delta<S>>>,
    hits: Option<FxHashMap<S, f64>>,
}

impl<G: Graph> Observer<G> for Recorder<G::Site> {
    fn on_event(&mut self, ev: &Applied<'_, G::Site>, _: &InfectedSet<G>) -> ControlFlow<()> {
        for c in ev.changes {
            if let Some(d) = &mut self.deltas {
                d.push(Delta { time: ev.time, site: c.site, infected: c.infected });
            }
            if c.infected {
                if let Some(h) = &mut self.hits {
                    h.entry(c.site).or_insert(ev.time);
                }
            }
        }
        ControlFlow::Continue(())
    }
}

/// Builder for a single run.
pub struct Simulation<'s, G: Graph, E> {
    source: &'s E,
    initial: Vec<G::Site>,
    rule: StirringRule,
    start: f64,
    recording: Recording,
    max_infected: usize,
}

impl<'s, G: Graph + Clone, E: EventSource<G>> Simulation<'s, G, E> {
    pub fn new(source: &'s E, initial: &[G::Site]) -> Self {
        Simulation {
            source,
            initial: initial.to_vec(),
            rule: StirringRule::Oriented,
            start: 0.0,
            recording: Recording::full(),
            max_infected: usize::MAX,
        }
    }

    pub fn rule(mut self, rule: StirringRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn start(mut self, start: f64) -> Self {
        self.start = start;
        self
    }

    pub fn recording(mut self, recording: Recording) -> Self {
        self.recording = recording;
        self
    }

    pub fn max_infected(mut self, cap: usize) -> Self {
        self.max_infected = cap;
        self
    }

    pub fn run(self, up_to: f64) -> Result<Trajectory<G::Site>> {
        self.run_observed(up_to, &mut ())
    }

    pub fn run_observed<O: Observer<G>>(self, up_to: f64, observer: &mut O) -> Result<Trajectory<G::Site>> {
        if !(up_to >= self.start && up_to <= self.source.horizon()) {
            return Err(Error::Domain(format!(
                "run end {up_to} outside [{}, {}]",
                self.start,
                self.source.horizon()
            )));
        }
        let mut initial = self.initial.clone();
        initial.sort();
        initial.dedup();
        let mut engine = Engine::new(self.source, self.rule, self.start, &initial)?;
        engine.set_max_infected(self.max_infected);
        let mut recorder = Recorder {
            deltas: self.recording.deltas.then(Vec::new),
            hits: self.recording.hits.then(|| initial.iter().map(|&x| (x, self.start)).collect()),
        };
        let mut times: Vec<f64> = self
            .recording
            .snapshots
            .iter()
            .copied()
            .filter(|&t| t >= self.start && t <= up_to)
            .collect();
        times.sort_by(f64::total_cmp);
        let mut snapshots = Vec::new();
        let mut halt = Halt::Reached;
        {
            let mut both = (&mut recorder, &mut *observer);
            for &t in &times {
                halt = engine.run_until(t, &mut both)?;
                if halt != Halt::Reached {
                    break;
                }
                snapshots.push((t, engine.state().sorted()));
            }
            if halt == Halt::Reached {
                halt = engine.run_until(up_to, &mut both)?;
            }
        }
        Ok(Trajectory {
            start: self.start,
            end: if halt == Halt::Reached { up_to } else { engine.now() },
            initial,
            deltas: recorder.deltas,
            hits: recorder.hits,
            snapshots,
            final_config: engine.state().sorted(),
            extinction: engine.extinction(),
            boundary_touched: engine.boundary_touched(),
            events_applied: engine.events_applied(),
            halt,
        })
    }
}

/// Runs the dynamics with the oriented rule, recording everything.
pub fn evolve<G: Graph + Clone, E: EventSource<G>>(
    initial: &[G::Site],
    source: &E,
    up_to: f64,
) -> Result<Trajectory<G::Site>> {
    Simulation::new(source, initial).run(up_to)
}

/// `inf{t : ξ_t = ∅}`, censored at the end of the run.
pub fn lifetime<S>(traj: &Trajectory<S>) -> CensoredTime {
    match traj.extinction {
        Some(t) => CensoredTime::At(t),
        None => CensoredTime::Censored(traj.end),
    }
}

fn need<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::Unsupported(format!("trajectory was run without recording {what}")))
}

/// First time `y` is infected; 0 (the start time) for initial sites.
pub fn hitting_time<S: Copy + Eq + std::hash::Hash>(traj: &Trajectory<S>, y: S) -> Result<CensoredTime> {
    let hits = need(&traj.hits, "hitting times")?;
    Ok(match hits.get(&y) {
        Some(&t) => CensoredTime::At(t),
        None => CensoredTime::Censored(traj.end),
    })
}

/// `H_t = {x : t(x) ≤ t}`, sorted.
pub fn once_infected_set<S: Copy + Ord + std::hash::Hash>(traj: &Trajectory<S>, t: f64) -> Result<Vec<S>> {
    let hits = need(&traj.hits, "hitting times")?;
    let mut v: Vec<S> = hits.iter().filter(|(_, &h)| h <= t).map(|(&x, _)| x).collect();
    v.sort();
    Ok(v)
}

/// Configuration after all events with time `≤ t`, sorted.
pub fn configuration_at<S: Copy + Ord>(traj: &Trajectory<S>, t: f64) -> Result<Vec<S>> {
    let deltas = need(&traj.deltas, "state changes")?;
    let mut set: BTreeSet<S> = traj.initial.iter().copied().collect();
    for d in deltas.iter().take_while(|d| d.time <= t) {
        if d.infected {
            set.insert(d.site);
        } else {
            set.remove(&d.site);
        }
    }
    Ok(set.into_iter().collect())
}

/// Visits the configuration after each distinct event time (and once at the
/// start). Useful for pathwise checks.
pub fn for_each_state<S: Copy + Ord, F: FnMut(f64, &BTreeSet<S>)>(traj: &Trajectory<S>, mut f: F) -> Result<()> {
    let deltas = need(&traj.deltas, "state changes")?;
    let mut set: BTreeSet<S> = traj.initial.iter().copied().collect();
    f(traj.start, &set);
    let mut i = 0;
    while i < deltas.len() {
        let t = deltas[i].time;
        while i < deltas.len() && deltas[i].time == t {
            if deltas[i].infected {
                set.insert(deltas[i].site);
            } else {
                set.remove(&deltas[i].site);
            }
            i += 1;
        }
        f(t, &set);
    }
    Ok(())
}

/// `(r_t, l_t)`: rightmost and leftmost infected sites in dimension one.
pub fn edge_stats_1d(graph: &LatticeBox, traj: &Trajectory<Point>, t: f64) -> Result<Option<(i32, i32)>> {
    if graph.dim() != 1 {
        return Err(Error::Unsupported("edge statistics are defined in dimension one".into()));
    }
    let config = configuration_at(traj, t)?;
    Ok(config.first().zip(config.last()).map(|(l, r)| (r.0[0], l.0[0])))
}

/// Checks `ξ_t^{A∪B} = ξ_t^A ∪ ξ_t^B` under shared randomness with the
/// exchange rule (for which every event acts as a union homomorphism).
pub fn additive_union_check<G: Graph + Clone, E: EventSource<G>>(
    a: &[G::Site],
    b: &[G::Site],
    source: &E,
    t: f64,
) -> Result<bool> {
    let run = |init: &[G::Site]| -> Result<Vec<G::Site>> {
        Ok(Simulation::new(source, init)
            .rule(StirringRule::Exchange)
            .recording(Recording::none())
            .run(t)?
            .final_config)
    };
    let union: Vec<G::Site> = a.iter().chain(b).copied().collect();
    let joint: BTreeSet<_> = run(&union)?.into_iter().collect();
    let split: BTreeSet<_> = run(a)?.into_iter().chain(run(b)?).collect();
    Ok(joint == split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::{sample_events, Event, EventLog, ModelParams, PoissonField};

    fn p(x: i32) -> Point {
        Point::new(&[x])
    }

    /// Reference semantics: path tokens swept through the sorted log one
    /// event at a time, with the stirring rule chosen by `mode`.
    #[derive(Clone, Copy, PartialEq)]
    enum PathMode {
        ForcedIfHealthy,
        Mandatory,
        Optional,
    }

    fn path_oracle(log: &EventLog<LatticeBox>, init: &[Point], s: f64, mode: PathMode) -> BTreeSet<Point> {
        let mut on: BTreeSet<Point> = init.iter().copied().collect();
        for e in log.events().iter().take_while(|e| e.time <= s) {
            let x = e.stream.site;
            let y = log.target(e);
            match e.stream.kind {
                StreamKind::Healing => {
                    on.remove(&y);
                }
                StreamKind::Infection => {
                    if on.contains(&x) {
                        on.insert(y);
                    }
                }
                StreamKind::Stirring => {
                    if !on.contains(&x) {
                        continue;
                    }
                    match mode {
                        PathMode::ForcedIfHealthy => {
                            if !on.contains(&y) {
                                on.remove(&x);
                                on.insert(y);
                            }
                        }
                        PathMode::Mandatory => {
                            on.remove(&x);
                            on.insert(y);
                        }
                        PathMode::Optional => {
                            on.insert(y);
                        }
                    }
                }
            }
        }
        on
    }

    fn figure_two() -> (LatticeBox, EventLog<LatticeBox>) {
        use StreamKind::*;
        let g = LatticeBox::new(1, 8).unwrap();
        let arrow = |k, t, a, b| EventLog::arrow(&g, k, t, p(a), p(b)).unwrap();
        let heal = |t, a| Event { time: t, stream: Stream::healing(p(a)) };
        let events = vec![
            heal(0.3, 4),
            arrow(Infection, 0.6, 2, 3),
            arrow(Stirring, 0.9, 2, 1),
            arrow(Infection, 1.2, 3, 2),
            arrow(Stirring, 1.5, 1, 2),
            arrow(Stirring, 1.8, 3, 4),
            heal(2.1, 2),
            heal(2.4, 4),
        ];
        let log = EventLog::from_events(&g, 3.0, events).unwrap();
        (g, log)
    }

    #[test]
    fn figure_two_reconstruction() {
        let (_, log) = figure_two();
        let a = [p(2), p(4), p(6)];
        let traj = evolve(&a, &log, 3.0).unwrap();
        assert_eq!(traj.final_config, vec![p(1), p(6)]);
        assert_eq!(hitting_time(&traj, p(1)).unwrap(), CensoredTime::At(0.9));

        let oracle = path_oracle(&log, &a, 3.0, PathMode::ForcedIfHealthy);
        assert_eq!(oracle.into_iter().collect::<Vec<_>>(), traj.final_config);
        // the rule matters: taking every stirring arrow loses site 1,
        // taking them optionally keeps site 3
        assert!(!path_oracle(&log, &a, 3.0, PathMode::Mandatory).contains(&p(1)));
        assert!(path_oracle(&log, &a, 3.0, PathMode::Optional).contains(&p(3)));
    }

    #[test]
    fn oracle_agrees_on_random_logs() {
        let g = LatticeBox::new(1, 6).unwrap();
        for seed in 0..200 {
            let log = sample_events(&g, ModelParams::cps(1.2, 0.8, 1.5), 4.0, seed).unwrap();
            let init = [p(-1), p(0), p(2)];
            let traj = evolve(&init, &log, 4.0).unwrap();
            for t in [0.5, 1.7, 3.1, 4.0] {
                let want: Vec<_> = path_oracle(&log, &init, t, PathMode::ForcedIfHealthy).into_iter().collect();
                assert_eq!(configuration_at(&traj, t).unwrap(), want, "seed {seed} t {t}");
            }
        }
    }

    #[test]
    fn lazy_field_and_materialized_log_give_same_run() {
        let g = LatticeBox::new(2, 5).unwrap();
        let field = PoissonField::new(&g, ModelParams::cps(2.0, 1.0, 1.0), 5.0, 77).unwrap();
        let log = crate::randomness::materialize(&field).unwrap();
        let a = evolve(&[Point::origin()], &field, 5.0).unwrap();
        let b = evolve(&[Point::origin()], &log, 5.0).unwrap();
        assert_eq!(a.deltas, b.deltas);
    }

    #[test]
    fn empty_stays_empty() {
        let g = LatticeBox::new(2, 4).unwrap();
        let log = sample_events(&g, ModelParams::rms(2.0), 3.0, 1).unwrap();
        let traj = evolve(&[], &log, 3.0).unwrap();
        assert!(traj.final_config.is_empty());
        assert_eq!(traj.deltas.as_ref().unwrap().len(), 0);
        assert_eq!(lifetime(&traj), CensoredTime::At(0.0));
    }

    #[test]
    fn single_stirring_arrow_moves_infection() {
        let g = LatticeBox::new(1, 3).unwrap();
        let e = EventLog::arrow(&g, StreamKind::Stirring, 1.0, p(0), p(1)).unwrap();
        let log = EventLog::from_events(&g, 3.0, vec![e]).unwrap();
        let traj = evolve(&[p(0)], &log, 3.0).unwrap();
        assert_eq!(configuration_at(&traj, 0.99).unwrap(), vec![p(0)]);
        assert_eq!(configuration_at(&traj, 1.0).unwrap(), vec![p(1)]);
        // the reverse arrow from a healthy site does nothing
        let e = EventLog::arrow(&g, StreamKind::Stirring, 1.0, p(1), p(0)).unwrap();
        let log = EventLog::from_events(&g, 3.0, vec![e]).unwrap();
        assert_eq!(evolve(&[p(0)], &log, 3.0).unwrap().final_config, vec![p(0)]);
    }

    #[test]
    fn lifetime_cases() {
        let g = LatticeBox::new(2, 4).unwrap();
        let log = sample_events(&g, ModelParams::rm(1.0), 2.0, 3).unwrap();
        assert!(lifetime(&evolve(&[Point::origin()], &log, 2.0).unwrap()).is_censored());

        let h = Event { time: 2.5, stream: Stream::healing(Point::origin()) };
        let log = EventLog::from_events(&g, 4.0, vec![h]).unwrap();
        assert_eq!(lifetime(&evolve(&[Point::origin()], &log, 4.0).unwrap()), CensoredTime::At(2.5));
    }

    #[test]
    fn edge_stats() {
        let g = LatticeBox::new(1, 6).unwrap();
        let e = EventLog::arrow(&g, StreamKind::Infection, 1.0, p(0), p(1)).unwrap();
        let log = EventLog::from_events(&g, 3.0, vec![e]).unwrap();
        let traj = evolve(&[p(0)], &log, 3.0).unwrap();
        assert_eq!(edge_stats_1d(&g, &traj, 0.5).unwrap(), Some((0, 0)));
        assert_eq!(edge_stats_1d(&g, &traj, 2.0).unwrap(), Some((1, 0)));
        let traj = evolve(&[p(-3), p(-1), p(4)], &EventLog::from_events(&g, 3.0, vec![]).unwrap(), 1.0).unwrap();
        assert_eq!(edge_stats_1d(&g, &traj, 1.0).unwrap(), Some((4, -3)));
        let empty = evolve(&[], &log, 1.0).unwrap();
        assert_eq!(edge_stats_1d(&g, &empty, 1.0).unwrap(), None);
    }

    #[test]
    fn rm_once_infected_equals_current() {
        let g = LatticeBox::new(2, 6).unwrap();
        let log = sample_events(&g, ModelParams::rm(1.0), 2.0, 8).unwrap();
        let traj = evolve(&[Point::origin()], &log, 2.0).unwrap();
        for t in [0.0, 0.7, 1.5, 2.0] {
            assert_eq!(once_infected_set(&traj, t).unwrap(), configuration_at(&traj, t).unwrap());
        }
        assert_eq!(once_infected_set(&traj, 0.0).unwrap(), vec![Point::origin()]);
    }

    #[test]
    fn snapshots_match_replay() {
        let g = LatticeBox::new(2, 6).unwrap();
        let log = sample_events(&g, ModelParams::cps(2.0, 1.0, 1.0), 4.0, 12).unwrap();
        let traj = Simulation::new(&log, &[Point::origin()])
            .recording(Recording { snapshots: vec![0.0, 1.0, 2.5, 4.0], ..Recording::full() })
            .run(4.0)
            .unwrap();
        assert_eq!(traj.snapshots.len(), 4);
        for (t, c) in &traj.snapshots {
            assert_eq!(&configuration_at(&traj, *t).unwrap(), c);
        }
    }

    #[test]
    fn additivity_holds_under_exchange() {
        let g = LatticeBox::new(2, 4).unwrap();
        let log = sample_events(&g, ModelParams::rms(1.0), 3.0, 4).unwrap();
        let a = [Point::new(&[0, 0]), Point::new(&[1, 0])];
        let b = [Point::new(&[1, 1]), Point::new(&[-2, 0])];
        assert!(additive_union_check(&a, &b, &log, 3.0).unwrap());
    }

    #[test]
    fn rejects_sites_outside() {
        let g = LatticeBox::new(1, 2).unwrap();
        let log = sample_events(&g, ModelParams::rm(1.0), 1.0, 1).unwrap();
        assert!(matches!(evolve(&[p(5)], &log, 1.0), Err(Error::Domain(_))));
        let bad = Event { time: 0.5, stream: Stream::healing(p(7)) };
        assert!(matches!(EventLog::from_events(&g, 1.0, vec![bad]), Err(Error::Mismatch(_))));
    }
}
