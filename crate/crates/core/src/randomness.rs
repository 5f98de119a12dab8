//! The graphical construction: independent Poisson streams of infection
//! arrows, stirring arrows and healing marks, plus the two transformations
//! that turn a stirring log into a dominated contact-process log (stirring
//! arrows out of `z` become healings at `z`) and a dominating Richardson log
//! (stirring arrows become infection arrows).
//!
//! Streams are sampled lazily. Time is cut into blocks holding on average
//! [`BLOCK_EVENTS`] events; block `k` of a stream is generated from its own
//! counter-mode RNG position, so any stream can be queried at any time
//! without touching the rest of the field, and a fully materialized
//! [`EventLog`] agrees bit-for-bit with the lazy view.

use std::fmt;
use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Graph;

/// Mean number of events per generated block of a stream.
pub const BLOCK_EVENTS: f64 = 2.0;

/// External Monte Carlo estimates of the contact-process critical value
/// (healing rate 1) on `ℤ¹` and `ℤ²`. Working points for experiments only;
/// nothing in this crate depends on their accuracy.
pub const CP_CRITICAL_ESTIMATES: [(usize, f64); 2] = [(1, 1.649), (2, 0.412)];

/// The estimate for dimension `d`, if one is tabulated.
pub fn cp_critical_estimate(d: usize) -> Option<f64> {
    CP_CRITICAL_ESTIMATES.iter().find(|e| e.0 == d).map(|e| e.1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum ModelKind {
    RM,
    CP,
    RMS,
    CPS,
}

impl ModelKind {
    pub fn heals(self) -> bool {
        matches!(self, ModelKind::CP | ModelKind::CPS)
    }

    pub fn stirs(self) -> bool {
        matches!(self, ModelKind::RMS | ModelKind::CPS)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Rates of one of the four models. Infection at rate `lambda` per oriented
/// edge, healing at rate `gamma` per site, stirring at rate `nu` per
/// oriented edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub lambda: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub nu: f64,
}

/// Figure-style label such as `RMS(1,1)` or `CPS(2,1,10)`.
impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (l, g, n) = (self.lambda, self.gamma, self.nu);
        match self.kind {
            ModelKind::RM => write!(f, "RM({l})"),
            ModelKind::CP => write!(f, "CP({l},{g})"),
            ModelKind::RMS => write!(f, "RMS({l},{n})"),
            ModelKind::CPS => write!(f, "CPS({l},{g},{n})"),
        }
    }
}

impl ModelParams {
    pub fn rm(lambda: f64) -> Self {
        ModelParams { kind: ModelKind::RM, lambda, gamma: 0.0, nu: 0.0 }
    }

    pub fn cp(lambda: f64, gamma: f64) -> Self {
        ModelParams { kind: ModelKind::CP, lambda, gamma, nu: 0.0 }
    }

    /// `RMS(λ, 1)`.
    pub fn rms(lambda: f64) -> Self {
        Self::rms_with(lambda, 1.0)
    }

    pub fn rms_with(lambda: f64, nu: f64) -> Self {
        ModelParams { kind: ModelKind::RMS, lambda, gamma: 0.0, nu }
    }

    pub fn cps(lambda: f64, gamma: f64, nu: f64) -> Self {
        ModelParams { kind: ModelKind::CPS, lambda, gamma, nu }
    }

    /// Infection rate zero is accepted so that pure stirring can be studied.
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite() && v >= 0.0;
        if !finite(self.lambda) || !finite(self.gamma) || !finite(self.nu) {
            return Err(Error::Domain(format!("rates must be finite and non-negative: {self:?}")));
        }
        if !self.kind.heals() && self.gamma != 0.0 {
            return Err(Error::Domain(format!("{} has no healing, got gamma={}", self.kind, self.gamma)));
        }
        if !self.kind.stirs() && self.nu != 0.0 {
            return Err(Error::Domain(format!("{} has no stirring, got nu={}", self.kind, self.nu)));
        }
        Ok(())
    }

    pub fn rate(&self, kind: StreamKind) -> f64 {
        match kind {
            StreamKind::Infection => self.lambda,
            StreamKind::Stirring => self.nu,
            StreamKind::Healing => self.gamma,
        }
    }
}

/// The three families of Poisson streams, in tie-breaking rank order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StreamKind {
    Infection = 0,
    Stirring = 1,
    Healing = 2,
}

impl StreamKind {
    fn tag(self) -> &'static str {
        match self {
            StreamKind::Infection => "I",
            StreamKind::Stirring => "S",
            StreamKind::Healing => "H",
        }
    }
}

/// Identity of one Poisson stream: an oriented edge `(site, neighbor(site,
/// slot))` for arrows, a site for healing marks (slot 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Stream<S> {
    pub kind: StreamKind,
    pub site: S,
    pub slot: u8,
}

impl<S> Stream<S> {
    pub fn infection(site: S, slot: usize) -> Self {
        Stream { kind: StreamKind::Infection, site, slot: slot as u8 }
    }

    pub fn stirring(site: S, slot: usize) -> Self {
        Stream { kind: StreamKind::Stirring, site, slot: slot as u8 }
    }

    pub fn healing(site: S) -> Self {
        Stream { kind: StreamKind::Healing, site, slot: 0 }
    }
}

/// One mark of the graphical construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event<S> {
    pub time: f64,
    pub stream: Stream<S>,
}

/// Anything that can answer "when does this stream fire next".
pub trait EventSource<G: Graph>: Sync {
    fn graph(&self) -> &G;

    fn horizon(&self) -> f64;

    /// First event of `stream` strictly after `after` and not later than the
    /// horizon. Arrows whose target lies outside the window never fire.
    fn next_after(&self, stream: Stream<G::Site>, after: f64) -> Option<f64>;
}

impl<G: Graph, E: EventSource<G> + ?Sized> EventSource<G> for &E {
    fn graph(&self) -> &G {
        (**self).graph()
    }
    fn horizon(&self) -> f64 {
        (**self).horizon()
    }
    fn next_after(&self, stream: Stream<G::Site>, after: f64) -> Option<f64> {
        (**self).next_after(stream, after)
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("horizon must be positive and finite, got {horizon}")))
    }
}

/// The lazily sampled Poisson field of a model on a graph.
#[derive(Clone, Debug)]
pub struct PoissonField<G> {
    graph: G,
    params: ModelParams,
    horizon: f64,
    seed: u64,
}

impl<G: Graph + Clone> PoissonField<G> {
    pub fn new(graph: &G, params: ModelParams, horizon: f64, seed: u64) -> Result<Self> {
        params.validate()?;
        check_horizon(horizon)?;
        Ok(PoissonField { graph: graph.clone(), params, horizon, seed })
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn stream_id(&self, s: &Stream<G::Site>) -> u128 {
        (self.graph.site_key(s.site) << 8) | ((s.slot as u128) << 2) | s.kind as u128
    }

    fn block_rng(&self, id: u128, block: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&((id >> 64) as u64).to_le_bytes());
        key[16..24].copy_from_slice(b"ipsfield");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(id as u64);
        rng.set_word_pos((block as u128) << 16);
        rng
    }

    /// Event times of one block, in increasing order.
    fn block_events(&self, id: u128, block: u64, width: f64, rate: f64, out: &mut Vec<f64>) {
        out.clear();
        let start = block as f64 * width;
        let end = start + width;
        let mut rng = self.block_rng(id, block);
        let mut t = start;
        loop {
            let gap: f64 = rng.sample(Exp1);
            t += gap / rate;
            if t >= end {
                break;
            }
            out.push(t);
        }
    }

    fn target_in_window(&self, s: &Stream<G::Site>) -> bool {
        match s.kind {
            StreamKind::Healing => s.slot == 0,
            _ => (s.slot as usize) < self.graph.slots() && self.graph.neighbor(s.site, s.slot as usize).is_some(),
        }
    }

    /// All events of one stream on `[0, horizon]`.
    pub fn stream_events(&self, stream: Stream<G::Site>) -> Vec<f64> {
        let mut out = Vec::new();
        let rate = self.params.rate(stream.kind);
        if rate <= 0.0 || !self.target_in_window(&stream) {
            return out;
        }
        let width = BLOCK_EVENTS / rate;
        let id = self.stream_id(&stream);
        let mut buf = Vec::new();
        let mut block = 0u64;
        while (block as f64) * width <= self.horizon {
            self.block_events(id, block, width, rate, &mut buf);
            out.extend(buf.iter().copied().filter(|&t| t <= self.horizon));
            block += 1;
        }
        out
    }
}

impl<G: Graph + Clone> EventSource<G> for PoissonField<G> {
    fn graph(&self) -> &G {
        &self.graph
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn next_after(&self, stream: Stream<G::Site>, after: f64) -> Option<f64> {
        let rate = self.params.rate(stream.kind);
        if rate <= 0.0 || after >= self.horizon || !self.target_in_window(&stream) {
            return None;
        }
        let width = BLOCK_EVENTS / rate;
        let id = self.stream_id(&stream);
        let mut block = if after < 0.0 { 0 } else { (after / width).floor() as u64 };
        let mut buf = Vec::new();
        while (block as f64) * width <= self.horizon {
            self.block_events(id, block, width, rate, &mut buf);
            if let Some(&t) = buf.iter().find(|&&t| t > after) {
                return (t <= self.horizon).then_some(t);
            }
            block += 1;
        }
        None
    }
}

/// A fully materialized, canonically ordered log.
#[derive(Clone, Debug)]
pub struct EventLog<G: Graph> {
    graph: G,
    horizon: f64,
    events: Vec<Event<G::Site>>,
    index: FxHashMap<Stream<G::Site>, Vec<f64>>,
}

fn event_order<S: Ord>(a: &Event<S>, b: &Event<S>) -> std::cmp::Ordering {
    a.time.total_cmp(&b.time).then_with(|| a.stream.cmp(&b.stream))
}

impl<G: Graph + Clone> EventLog<G> {
    /// Builds a log from arbitrary events, validating them against the graph
    /// and sorting them canonically (time, kind rank, site, slot).
    pub fn from_events(graph: &G, horizon: f64, mut events: Vec<Event<G::Site>>) -> Result<Self> {
        check_horizon(horizon)?;
        for e in &events {
            let s = e.stream;
            if !graph.contains(s.site) {
                return Err(Error::Mismatch(format!("site {:?} outside the topology", s.site)));
            }
            if s.kind != StreamKind::Healing
                && ((s.slot as usize) >= graph.slots() || graph.neighbor(s.site, s.slot as usize).is_none())
            {
                return Err(Error::Mismatch(format!(
                    "arrow from {:?} through slot {} leaves the topology",
                    s.site, s.slot
                )));
            }
            if s.kind == StreamKind::Healing && s.slot != 0 {
                return Err(Error::Mismatch("healing marks carry slot 0".into()));
            }
            if !(e.time >= 0.0 && e.time <= horizon) {
                return Err(Error::Mismatch(format!("event time {} outside [0, {horizon}]", e.time)));
            }
        }
        events.sort_by(event_order);
        let mut index: FxHashMap<Stream<G::Site>, Vec<f64>> = FxHashMap::default();
        for e in &events {
            index.entry(e.stream).or_default().push(e.time);
        }
        Ok(EventLog { graph: graph.clone(), horizon, events, index })
    }

    /// Convenience for hand-built logs: arrows given by their endpoints.
    pub fn arrow(graph: &G, kind: StreamKind, time: f64, from: G::Site, to: G::Site) -> Result<Event<G::Site>> {
        let slot = (0..graph.slots())
            .find(|&s| graph.neighbor(from, s) == Some(to))
            .ok_or_else(|| Error::Mismatch(format!("{from:?} and {to:?} are not neighbors")))?;
        Ok(Event { time, stream: Stream { kind, site: from, slot: slot as u8 } })
    }

    pub fn events(&self) -> &[Event<G::Site>] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, kind: StreamKind) -> usize {
        self.events.iter().filter(|e| e.stream.kind == kind).count()
    }

    /// Target of an arrow event, or the site of a healing mark.
    pub fn target(&self, e: &Event<G::Site>) -> G::Site {
        match e.stream.kind {
            StreamKind::Healing => e.stream.site,
            _ => self
                .graph
                .neighbor(e.stream.site, e.stream.slot as usize)
                .expect("validated at construction"),
        }
    }

    /// Writes `time,kind,from,to/site`; a healing mark leaves `from` empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,kind,from,to/site")?;
        for e in &self.events {
            let target = self.graph.format_site(self.target(e));
            match e.stream.kind {
                StreamKind::Healing => writeln!(w, "{:?},H,,{}", e.time, target)?,
                k => writeln!(w, "{:?},{},{},{}", e.time, k.tag(), self.graph.format_site(e.stream.site), target)?,
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Reads the format of [`EventLog::write_csv`]. Lines starting with `#`
    /// are ignored.
    pub fn read_csv<R: BufRead>(graph: &G, horizon: f64, r: R) -> Result<Self> {
        let mut events = Vec::new();
        let mut header_seen = false;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                if line.starts_with("time") {
                    continue;
                }
            }
            let bad = |msg: &str| Error::Mismatch(format!("line {}: {msg}", lineno + 1));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(bad("expected 4 columns"));
            }
            let time: f64 = cols[0].parse().map_err(|_| bad("bad time"))?;
            let to = graph.parse_site(cols[3]).map_err(|e| bad(&e.to_string()))?;
            let ev = match cols[1] {
                "H" => Event { time, stream: Stream::healing(to) },
                k => {
                    let kind = match k {
                        "I" => StreamKind::Infection,
                        "S" => StreamKind::Stirring,
                        _ => return Err(bad("unknown event kind")),
                    };
                    let from = graph.parse_site(cols[2]).map_err(|e| bad(&e.to_string()))?;
                    Self::arrow(graph, kind, time, from, to)?
                }
            };
            events.push(ev);
        }
        Self::from_events(graph, horizon, events)
    }
}

impl<G: Graph + Clone> EventSource<G> for EventLog<G> {
    fn graph(&self) -> &G {
        &self.graph
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn next_after(&self, stream: Stream<G::Site>, after: f64) -> Option<f64> {
        let times = self.index.get(&stream)?;
        let i = times.partition_point(|&t| t <= after);
        times.get(i).copied()
    }
}

/// Materializes every stream of the field over the whole window.
pub fn sample_events<G: Graph + Clone>(graph: &G, params: ModelParams, horizon: f64, seed: u64) -> Result<EventLog<G>> {
    let field = PoissonField::new(graph, params, horizon, seed)?;
    materialize(&field)
}

/// Materializes any source over its whole window by enumerating streams.
pub fn materialize<G: Graph + Clone, E: EventSource<G>>(source: &E) -> Result<EventLog<G>> {
    let graph = source.graph();
    let mut events = Vec::new();
    let mut push_all = |stream: Stream<G::Site>| {
        let mut t = -1.0;
        while let Some(next) = source.next_after(stream, t) {
            events.push(Event { time: next, stream });
            t = next;
        }
    };
    for x in graph.sites() {
        for slot in 0..graph.slots() {
            if graph.neighbor(x, slot).is_some() {
                push_all(Stream::infection(x, slot));
                push_all(Stream::stirring(x, slot));
            }
        }
        push_all(Stream::healing(x));
    }
    EventLog::from_events(graph, source.horizon(), events)
}

/// Lazy view of the dominated log: infections kept, each stirring arrow
/// `(z, x)` replaced by a healing mark at `z`, original healings kept.
#[derive(Clone, Debug)]
pub struct LowerView<E>(pub E);

impl<G: Graph, E: EventSource<G>> EventSource<G> for LowerView<E> {
    fn graph(&self) -> &G {
        self.0.graph()
    }

    fn horizon(&self) -> f64 {
        self.0.horizon()
    }

    fn next_after(&self, stream: Stream<G::Site>, after: f64) -> Option<f64> {
        match stream.kind {
            StreamKind::Infection => self.0.next_after(stream, after),
            StreamKind::Stirring => None,
            StreamKind::Healing => {
                let g = self.0.graph();
                (0..g.slots())
                    .filter_map(|slot| self.0.next_after(Stream::stirring(stream.site, slot), after))
                    .chain(self.0.next_after(stream, after))
                    .min_by(f64::total_cmp)
            }
        }
    }
}

/// Lazy view of the dominating log: stirring arrows become infection arrows
/// on the same oriented edge; healings dropped.
#[derive(Clone, Debug)]
pub struct UpperView<E>(pub E);

impl<G: Graph, E: EventSource<G>> EventSource<G> for UpperView<E> {
    fn graph(&self) -> &G {
        self.0.graph()
    }

    fn horizon(&self) -> f64 {
        self.0.horizon()
    }

    fn next_after(&self, stream: Stream<G::Site>, after: f64) -> Option<f64> {
        match stream.kind {
            StreamKind::Infection => {
                let stir = Stream { kind: StreamKind::Stirring, ..stream };
                [self.0.next_after(stream, after), self.0.next_after(stir, after)]
                    .into_iter()
                    .flatten()
                    .min_by(f64::total_cmp)
            }
            _ => None,
        }
    }
}

/// Materialized form of [`LowerView`].
pub fn transform_lower<G: Graph + Clone>(log: &EventLog<G>) -> EventLog<G> {
    let events = log
        .events
        .iter()
        .map(|e| match e.stream.kind {
            StreamKind::Stirring => Event { time: e.time, stream: Stream::healing(e.stream.site) },
            _ => *e,
        })
        .collect();
    EventLog::from_events(&log.graph, log.horizon, events).expect("transform of a valid log is valid")
}

/// Materialized form of [`UpperView`].
pub fn transform_upper<G: Graph + Clone>(log: &EventLog<G>) -> EventLog<G> {
    let events = log
        .events
        .iter()
        .filter_map(|e| match e.stream.kind {
            StreamKind::Healing => None,
            StreamKind::Stirring => Some(Event {
                time: e.time,
                stream: Stream { kind: StreamKind::Infection, ..e.stream },
            }),
            StreamKind::Infection => Some(*e),
        })
        .collect();
    EventLog::from_events(&log.graph, log.horizon, events).expect("transform of a valid log is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{LatticeBox, Point};

    fn line(r: u32) -> LatticeBox {
        LatticeBox::new(1, r).unwrap()
    }

    #[test]
    fn rm_log_has_only_infections() {
        let g = LatticeBox::new(2, 3).unwrap();
        let log = sample_events(&g, ModelParams::rm(1.5), 4.0, 9).unwrap();
        assert!(log.count(StreamKind::Infection) > 0);
        assert_eq!(log.count(StreamKind::Stirring), 0);
        assert_eq!(log.count(StreamKind::Healing), 0);
    }

    #[test]
    fn rejects_bad_horizon_and_params() {
        let g = line(2);
        assert!(matches!(sample_events(&g, ModelParams::rms(1.0), 0.0, 1), Err(Error::Domain(_))));
        assert!(matches!(sample_events(&g, ModelParams::rms(1.0), -1.0, 1), Err(Error::Domain(_))));
        let bad = ModelParams { gamma: 1.0, ..ModelParams::rm(1.0) };
        assert!(sample_events(&g, bad, 1.0, 1).is_err());
    }

    #[test]
    fn lazy_and_materialized_agree() {
        let g = LatticeBox::new(2, 2).unwrap();
        let field = PoissonField::new(&g, ModelParams::cps(1.3, 1.0, 0.7), 6.0, 42).unwrap();
        let log = materialize(&field).unwrap();
        for x in g.sites() {
            for slot in 0..g.slots() {
                for s in [Stream::infection(x, slot), Stream::stirring(x, slot)] {
                    assert_eq!(field.stream_events(s), log.index.get(&s).cloned().unwrap_or_default());
                }
            }
            let h = Stream::healing(x);
            for after in [0.0, 0.5, 2.0, 5.9] {
                assert_eq!(field.next_after(h, after), log.next_after(h, after));
            }
        }
    }

    #[test]
    fn deterministic_serialization() {
        let g = LatticeBox::new(2, 2).unwrap();
        let a = sample_events(&g, ModelParams::rms(1.0), 3.0, 5).unwrap().to_csv_string();
        let b = sample_events(&g, ModelParams::rms(1.0), 3.0, 5).unwrap().to_csv_string();
        let c = sample_events(&g, ModelParams::rms(1.0), 3.0, 6).unwrap().to_csv_string();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn csv_round_trip() {
        let g = LatticeBox::new(2, 2).unwrap();
        let log = sample_events(&g, ModelParams::cps(1.0, 1.0, 1.0), 2.0, 3).unwrap();
        let text = log.to_csv_string();
        let back = EventLog::read_csv(&g, 2.0, text.as_bytes()).unwrap();
        assert_eq!(back.to_csv_string(), text);
    }

    #[test]
    fn lower_transform_moves_stirring_to_healing_at_source() {
        let g = LatticeBox::new(2, 3).unwrap();
        let o = Point::new(&[0, 0]);
        let e = Point::new(&[1, 0]);
        let ev = EventLog::arrow(&g, StreamKind::Stirring, 3.2, o, e).unwrap();
        let log = EventLog::from_events(&g, 5.0, vec![ev]).unwrap();
        let lower = transform_lower(&log);
        assert_eq!(lower.events(), &[Event { time: 3.2, stream: Stream::healing(o) }]);
        assert_eq!(LowerView(&log).next_after(Stream::healing(o), 0.0), Some(3.2));
        assert_eq!(LowerView(&log).next_after(Stream::healing(e), 0.0), None);

        let upper = transform_upper(&log);
        assert_eq!(upper.len(), 1);
        assert_eq!(upper.events()[0].stream.kind, StreamKind::Infection);
        assert_eq!(upper.target(&upper.events()[0]), e);
    }

    #[test]
    fn transforms_are_identity_without_stirring() {
        let g = LatticeBox::new(2, 2).unwrap();
        let log = sample_events(&g, ModelParams::cp(1.0, 1.0), 3.0, 1).unwrap();
        assert_eq!(transform_lower(&log).to_csv_string(), log.to_csv_string());
        let rm = sample_events(&g, ModelParams::rm(1.0), 3.0, 1).unwrap();
        assert_eq!(transform_upper(&rm).to_csv_string(), rm.to_csv_string());
    }

    #[test]
    fn event_count_mean_matches_intensity() {
        // d=1, R=1: 4 oriented edges, each with infection and stirring at rate 1
        let g = line(1);
        let t = 10.0;
        let n = 10_000u64;
        let counts: Vec<f64> = (0..n)
            .map(|s| sample_events(&g, ModelParams::rms(1.0), t, s).unwrap().len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let expected = 4.0 * 2.0 * t;
        let se = (var / n as f64).sqrt();
        assert!((mean - expected).abs() <= 3.0 * se, "mean {mean} vs {expected} (se {se})");
        // Poisson: variance equals mean
        let var_se = expected * (2.0 / n as f64).sqrt() * 1.5;
        assert!((var - expected).abs() <= 3.0 * var_se, "var {var}");
    }
}
