//! Exact companions of the simulations: frontier counts, an exhaustive
//! isoperimetric scan over lattice animals, the pure birth process that
//! bounds the growth of the stirring model, generator drifts by enumeration,
//! and a search for transitions that break the FKG lattice condition.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::dynamics::{Applied, FnObserver, InfectedSet, Recording, Simulation};
use crate::error::{Error, Result};
use crate::randomness::{ModelKind, ModelParams, PoissonField, StreamKind};
use crate::stats::{wilson, Proportion};
use crate::topology::{Graph, LatticeBox, Point};

/// Counts of healthy sites by number of infected neighbors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrontierProfile {
    /// `counts[i-1] = |Fr_i|` for `i = 1..=2d`.
    pub counts: Vec<u64>,
    /// `|Fr| = Σ |Fr_i|`.
    pub frontier: u64,
    /// `I = Σ i |Fr_i|`, the number of infected→healthy ordered pairs.
    pub pressure: u64,
    /// Some infected site lies on the window boundary, so counts are
    /// truncated.
    pub boundary: bool,
}

pub fn frontier_profile(graph: &LatticeBox, config: &[Point]) -> FrontierProfile {
    let infected: FxHashSet<Point> = config.iter().copied().collect();
    let mut healthy: FxHashSet<Point> = FxHashSet::default();
    let mut boundary = false;
    for &x in config {
        boundary |= graph.is_boundary(x);
        for y in graph.neighbors_of(x) {
            if !infected.contains(&y) {
                healthy.insert(y);
            }
        }
    }
    let mut counts = vec![0u64; graph.slots()];
    for &y in &healthy {
        let k = graph.neighbors_of(y).iter().filter(|z| infected.contains(z)).count();
        counts[k - 1] += 1;
    }
    let frontier = counts.iter().sum();
    let pressure = counts.iter().enumerate().map(|(i, c)| (i as u64 + 1) * c).sum();
    FrontierProfile { counts, frontier, pressure, boundary }
}

/// Smallest frontier among connected sets of one size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsoRow {
    pub size: usize,
    /// Number of connected sets of this size up to translation.
    pub animals: u64,
    pub min_frontier: u64,
    /// `min |Fr(A)| / |A|^{1-1/d}`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsoTable {
    pub dim: usize,
    pub rows: Vec<IsoRow>,
}

impl IsoTable {
    /// The smallest ratio over all scanned sizes: an empirical constant
    /// certified up to the largest scanned size.
    pub fn c_hat(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min)
    }

    pub fn max_size(&self) -> usize {
        self.rows.len()
    }
}

fn cell_neighbors(d: usize, c: Point) -> impl Iterator<Item = Point> {
    (0..2 * d).map(move |s| {
        let mut p = c;
        if s < d {
            p.0[s] -= 1;
        } else {
            p.0[s - d] += 1;
        }
        p
    })
}

/// Outer vertex boundary of a set of cells.
pub fn vertex_frontier(d: usize, cells: &[Point]) -> u64 {
    let set: FxHashSet<Point> = cells.iter().copied().collect();
    let mut out: FxHashSet<Point> = FxHashSet::default();
    for &c in cells {
        for n in cell_neighbors(d, c) {
            if !set.contains(&n) {
                out.insert(n);
            }
        }
    }
    out.len() as u64
}

/// Redelmeier's enumeration of fixed animals whose lexicographically
/// smallest cell is the origin; every animal up to translation is visited
/// exactly once.
fn redelmeier<F: FnMut(&[Point])>(
    d: usize,
    untried: &mut Vec<Point>,
    animal: &mut Vec<Point>,
    seen: &mut FxHashSet<Point>,
    max: usize,
    visit: &mut F,
) {
    while let Some(c) = untried.pop() {
        animal.push(c);
        visit(animal);
        if animal.len() < max {
            let origin = Point::origin();
            let added: Vec<Point> = cell_neighbors(d, c)
                .filter(|&n| n > origin && seen.insert(n))
                .collect();
            let mut next = untried.clone();
            next.extend(added.iter().copied());
            redelmeier(d, &mut next, animal, seen, max, visit);
            for n in &added {
                seen.remove(n);
            }
        }
        animal.pop();
    }
}

/// Exhaustive scan of connected sets up to translation.
pub fn isoperimetric_scan(d: usize, max_size: usize) -> Result<IsoTable> {
    if !(2..=3).contains(&d) {
        return Err(Error::Domain(format!("isoperimetric scan supports d in {{2, 3}}, got {d}")));
    }
    if max_size == 0 || max_size > 10 {
        return Err(Error::Domain(format!("size {max_size} outside 1..=10 (enumeration explodes)")));
    }
    let mut animals = vec![0u64; max_size];
    let mut best = vec![u64::MAX; max_size];
    let mut untried = vec![Point::origin()];
    let mut seen: FxHashSet<Point> = [Point::origin()].into_iter().collect();
    let mut animal = Vec::with_capacity(max_size);
    redelmeier(d, &mut untried, &mut animal, &mut seen, max_size, &mut |a: &[Point]| {
        let k = a.len() - 1;
        animals[k] += 1;
        best[k] = best[k].min(vertex_frontier(d, a));
    });
    let rows = (0..max_size)
        .map(|k| {
            let size = k + 1;
            IsoRow {
                size,
                animals: animals[k],
                min_frontier: best[k],
                ratio: best[k] as f64 / (size as f64).powf(1.0 - 1.0 / d as f64),
            }
        })
        .collect();
    Ok(IsoTable { dim: d, rows })
}

/// `F(k) = Σ_{i=1}^{k-1} i^{1/d - 1}` with Neumaier compensated summation.
pub fn f_value(k: u64, d: u32) -> f64 {
    let e = 1.0 / d as f64 - 1.0;
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for i in 1..k {
        let term = (i as f64).powf(e);
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
    }
    sum + comp
}

/// `F(1), …, F(k_max)` in one pass (index `k - 1`).
pub fn f_table(k_max: u64, d: u32) -> Vec<f64> {
    let e = 1.0 / d as f64 - 1.0;
    let mut out = Vec::with_capacity(k_max as usize);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    out.push(0.0);
    for i in 1..k_max {
        let term = (i as f64).powf(e);
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
        out.push(sum + comp);
    }
    out
}

/// Piecewise-linear extension of `F` to real `x ≥ 1`.
pub fn f_interp(x: f64, d: u32) -> f64 {
    if x <= 1.0 {
        return 0.0;
    }
    let k = x.floor() as u64;
    let lo = f_value(k, d);
    let slope = (k as f64).powf(1.0 / d as f64 - 1.0);
    lo + (x - k as f64) * slope
}

/// Inverse of [`f_interp`] by bisection.
pub fn f_inverse(y: f64, d: u32) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    let mut hi = 2.0;
    while f_interp(hi, d) < y {
        hi *= 2.0;
    }
    let mut lo = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f_interp(mid, d) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Result of checking bounds on `F` for every `k ≤ k_max`.
#[derive(Clone, Debug, Serialize)]
pub struct BracketReport {
    pub d: u32,
    pub k_max: u64,
    /// `k` with `d (k-1)^{1/d} > F(k)`.
    pub lower_failures: u64,
    pub first_lower_failure: Option<u64>,
    /// `k` with `F(k) > d k^{1/d} - 1`.
    pub upper_failures: u64,
    /// `k` with `d (k^{1/d} - 1) > F(k)` or `F(k) > d (k-1)^{1/d}`: the
    /// integral-comparison bracket.
    pub integral_failures: u64,
}

impl BracketReport {
    pub fn holds(&self) -> bool {
        self.lower_failures == 0 && self.upper_failures == 0
    }
}

/// Checks `d (k-1)^{1/d} ≤ F(k) ≤ d k^{1/d} - 1` and, alongside, the
/// integral bracket `d (k^{1/d} - 1) ≤ F(k) ≤ d (k-1)^{1/d}`.
pub fn f_bracket_check(d: u32, k_max: u64) -> BracketReport {
    let table = f_table(k_max, d);
    let inv = 1.0 / d as f64;
    let df = d as f64;
    let mut r = BracketReport {
        d,
        k_max,
        lower_failures: 0,
        first_lower_failure: None,
        upper_failures: 0,
        integral_failures: 0,
    };
    for k in 1..=k_max {
        let f = table[k as usize - 1];
        let kf = k as f64;
        let lower = df * (kf - 1.0).powf(inv);
        if lower > f {
            r.lower_failures += 1;
            r.first_lower_failure.get_or_insert(k);
        }
        if f > df * kf.powf(inv) - 1.0 {
            r.upper_failures += 1;
        }
        if df * (kf.powf(inv) - 1.0) > f || f > lower {
            r.integral_failures += 1;
        }
    }
    r
}

/// A path of the pure birth process `Y` with rates `q_i = C λ i^{1-1/d}`.
#[derive(Clone, Debug)]
pub struct BirthPath {
    pub c_lambda: f64,
    pub d: u32,
    pub horizon: f64,
    /// Times at which `Y` jumps from `i` to `i+1`, in order (`Y_0 = 1`).
    pub jumps: Vec<f64>,
}

impl BirthPath {
    pub fn y(&self, t: f64) -> u64 {
        1 + self.jumps.partition_point(|&s| s <= t) as u64
    }

    /// `X_t = F(Y_t) - C λ t`.
    pub fn x(&self, t: f64) -> f64 {
        f_value(self.y(t), self.d) - self.c_lambda * t
    }
}

pub fn simulate_birth(c: f64, lambda: f64, d: u32, horizon: f64, seed: u64) -> Result<BirthPath> {
    if !(c > 0.0 && lambda > 0.0) || d < 2 || horizon.is_nan() || horizon < 0.0 {
        return Err(Error::Domain(format!(
            "birth process needs C, λ > 0, d ≥ 2 and a non-negative horizon (C={c}, λ={lambda}, d={d})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cl = c * lambda;
    let e = 1.0 - 1.0 / d as f64;
    let (mut t, mut i) = (0.0, 1u64);
    let mut jumps = Vec::new();
    loop {
        let q = cl * (i as f64).powf(e);
        let hold: f64 = rng.sample(Exp1);
        t += hold / q;
        if t > horizon {
            break;
        }
        jumps.push(t);
        i += 1;
    }
    Ok(BirthPath { c_lambda: cl, d, horizon, jumps })
}

/// All positive-rate transitions out of `config` under the generator with
/// infection `λ` per infected neighbor, healing `γ` per site and stirring
/// `ν` per oriented edge from an infected to a healthy site.
pub fn transitions<G: Graph>(graph: &G, config: &BTreeSet<G::Site>, params: &ModelParams) -> Vec<(f64, StreamKind, BTreeSet<G::Site>)> {
    let mut out = Vec::new();
    for &x in config {
        if params.gamma > 0.0 {
            let mut next = config.clone();
            next.remove(&x);
            out.push((params.gamma, StreamKind::Healing, next));
        }
        for y in graph.neighbors_of(x) {
            if config.contains(&y) {
                continue;
            }
            if params.lambda > 0.0 {
                let mut next = config.clone();
                next.insert(y);
                out.push((params.lambda, StreamKind::Infection, next));
            }
            if params.nu > 0.0 {
                let mut next = config.clone();
                next.remove(&x);
                next.insert(y);
                out.push((params.nu, StreamKind::Stirring, next));
            }
        }
    }
    out
}

/// `𝓛f(ξ) = Σ rate · (f(ξ') - f(ξ))` by enumeration of transitions.
pub fn exact_drift<G: Graph, F: Fn(&BTreeSet<G::Site>) -> f64>(
    observable: F,
    config: &[G::Site],
    params: &ModelParams,
    graph: &G,
) -> f64 {
    let xi: BTreeSet<G::Site> = config.iter().copied().collect();
    let base = observable(&xi);
    transitions(graph, &xi, params)
        .into_iter()
        .map(|(rate, _, next)| rate * (observable(&next) - base))
        .sum()
}

/// A positive-rate transition between incomparable configurations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FkgWitness {
    pub from: Vec<bool>,
    pub to: Vec<bool>,
    pub kind: String,
}

impl std::fmt::Display for FkgWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let show = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        write!(f, "({}) -> ({}) by {}", show(&self.from), show(&self.to), self.kind)
    }
}

/// Searches the rate table of the model on a path of `len` sites for a
/// transition whose endpoints are incomparable. Configurations are tried in
/// increasing binary order with site 0 as the lowest bit.
pub fn fkg_witness(params: &ModelParams, len: usize) -> Result<Option<FkgWitness>> {
    params.validate()?;
    if !(2..=20).contains(&len) {
        return Err(Error::Domain(format!("segment length must be in 2..=20, got {len}")));
    }
    let graph = LatticeBox::new(1, (len as u32 - 1).div_ceil(2))?;
    // sites -r..=r; use the first `len` of them
    let sites: Vec<Point> = graph.sites().into_iter().take(len).collect();
    let segment = |bits: u32| -> BTreeSet<Point> {
        (0..len).filter(|i| bits >> i & 1 == 1).map(|i| sites[i]).collect()
    };
    let bits_of = |set: &BTreeSet<Point>| -> Vec<bool> { sites.iter().map(|s| set.contains(s)).collect() };
    for bits in 0..(1u32 << len) {
        let xi = segment(bits);
        for (rate, kind, next) in transitions(&graph, &xi, params) {
            // transitions leaving the segment are not part of its rate table
            if rate <= 0.0 || next.iter().any(|p| !sites.contains(p)) {
                continue;
            }
            if !next.is_subset(&xi) && !xi.is_subset(&next) {
                return Ok(Some(FkgWitness {
                    from: bits_of(&xi),
                    to: bits_of(&next),
                    kind: format!("{kind:?}").to_lowercase(),
                }));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityPoint {
    pub t: f64,
    pub threshold: f64,
    pub frequency: Proportion,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityReport {
    pub c_hat: f64,
    /// `B = (Ĉ λ / 2d)^d`.
    pub b: f64,
    pub points: Vec<DensityPoint>,
    pub excluded_boundary: u64,
    pub checked_events: u64,
    /// Events where `I(ξ) < Ĉ |ξ|^{1-1/d}` with `|ξ|` inside the certified
    /// range of `Ĉ`.
    pub violations_certified: u64,
    /// Same, for sizes beyond the certified range (reported only).
    pub violations_uncertified: u64,
}

#[derive(Clone, Debug)]
pub struct DensityOptions {
    pub times: Vec<f64>,
    pub replicas: u64,
    pub seed: u64,
    pub c_hat: f64,
    /// Largest size for which `c_hat` is certified.
    pub certified_size: usize,
}

/// Frequency of `|ξ_t| ≥ B t^d` and the pathwise frontier inequality at
/// every event of every replica, started from the origin.
pub fn density_check(graph: &LatticeBox, params: ModelParams, opts: &DensityOptions) -> Result<DensityReport> {
    if params.kind != ModelKind::RMS {
        return Err(Error::Domain("density check is defined for the stirring Richardson model".into()));
    }
    let d = graph.dim();
    let horizon = opts.times.iter().copied().fold(0.0, f64::max);
    let b = (opts.c_hat * params.lambda / (2.0 * d as f64)).powi(d as i32);
    let exponent = 1.0 - 1.0 / d as f64;

    struct Rep {
        sizes: Vec<usize>,
        boundary: bool,
        checked: u64,
        certified: u64,
        uncertified: u64,
    }
    let reps: Vec<Rep> = (0..opts.replicas)
        .into_par_iter()
        .map(|i| -> Result<Rep> {
            let field = PoissonField::new(graph, params, horizon.max(f64::MIN_POSITIVE), opts.seed + i)?;
            let mut config: FxHashSet<Point> = [Point::origin()].into_iter().collect();
            let mut pressure = graph.neighbors_of(Point::origin()).len() as i64;
            let (mut checked, mut certified, mut uncertified) = (0u64, 0u64, 0u64);
            let mut obs = FnObserver(|ev: &Applied<'_, Point>, _: &InfectedSet<LatticeBox>| {
                for c in ev.changes {
                    let (mut inf, mut healthy) = (0i64, 0i64);
                    for y in graph.neighbors_of(c.site) {
                        if config.contains(&y) {
                            inf += 1;
                        } else {
                            healthy += 1;
                        }
                    }
                    if c.infected {
                        config.insert(c.site);
                        pressure += healthy - inf;
                    } else {
                        config.remove(&c.site);
                        pressure -= healthy - inf;
                    }
                }
                checked += 1;
                let n = config.len();
                if (pressure as f64) < opts.c_hat * (n as f64).powf(exponent) {
                    if n <= opts.certified_size {
                        certified += 1;
                    } else {
                        uncertified += 1;
                    }
                }
                ControlFlow::Continue(())
            });
            let traj = Simulation::new(&field, &[Point::origin()])
                .recording(Recording { deltas: false, hits: false, snapshots: opts.times.clone() })
                .run_observed(horizon, &mut obs)?;
            let sizes = opts
                .times
                .iter()
                .map(|t| traj.snapshots.iter().find(|s| s.0 == *t).map_or(1, |s| s.1.len()))
                .collect();
            Ok(Rep { sizes, boundary: traj.boundary_touched, checked, certified, uncertified })
        })
        .collect::<Result<_>>()?;

    let kept: Vec<&Rep> = reps.iter().filter(|r| !r.boundary).collect();
    let points = opts
        .times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let threshold = b * t.powi(d as i32);
            let k = kept.iter().filter(|r| r.sizes[j] as f64 >= threshold).count() as u64;
            DensityPoint { t, threshold, frequency: wilson(k, kept.len() as u64, 1.96) }
        })
        .collect();
    Ok(DensityReport {
        c_hat: opts.c_hat,
        b,
        points,
        excluded_boundary: (reps.len() - kept.len()) as u64,
        checked_events: reps.iter().map(|r| r.checked).sum(),
        violations_certified: reps.iter().map(|r| r.certified).sum(),
        violations_uncertified: reps.iter().map(|r| r.uncertified).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::TruncatedTree;
    use std::collections::HashSet;

    fn p(x: i32, y: i32) -> Point {
        Point::new(&[x, y])
    }

    #[test]
    fn frontier_examples() {
        let g = LatticeBox::new(2, 6).unwrap();
        let f = frontier_profile(&g, &[p(0, 0)]);
        assert_eq!((f.counts[0], f.pressure), (4, 4));
        let f = frontier_profile(&g, &[p(0, 0), p(1, 0)]);
        assert_eq!((f.counts[0], f.frontier, f.pressure), (6, 6, 6));
        let f = frontier_profile(&g, &[p(0, 0), p(1, 0), p(0, 1), p(1, 1)]);
        assert_eq!((f.counts[0], f.frontier, f.pressure), (8, 8, 8));
        assert!(!f.boundary);
    }

    /// Independent enumeration: grow every set by one neighbor and dedupe
    /// after translating the minimum cell to the origin.
    fn naive_animals(d: usize, max: usize) -> Vec<HashSet<Vec<Point>>> {
        let norm = |mut v: Vec<Point>| {
            v.sort();
            let m = v[0];
            let mut out: Vec<Point> = v
                .iter()
                .map(|c| {
                    let mut q = *c;
                    for i in 0..d {
                        q.0[i] -= m.0[i];
                    }
                    q
                })
                .collect();
            out.sort();
            out
        };
        let mut levels = vec![HashSet::from([vec![Point::origin()]])];
        for _ in 1..max {
            let mut next = HashSet::new();
            for a in levels.last().unwrap() {
                for &c in a {
                    for n in cell_neighbors(d, c) {
                        if !a.contains(&n) {
                            let mut b = a.clone();
                            b.push(n);
                            next.insert(norm(b));
                        }
                    }
                }
            }
            levels.push(next);
        }
        levels
    }

    #[test]
    fn scan_matches_naive_enumeration() {
        for (d, max) in [(2, 8), (3, 5)] {
            let table = isoperimetric_scan(d, max).unwrap();
            let naive = naive_animals(d, max);
            for (row, level) in table.rows.iter().zip(&naive) {
                assert_eq!(row.animals, level.len() as u64, "d={d} size={}", row.size);
                let best = level.iter().map(|a| vertex_frontier(d, a)).min().unwrap();
                assert_eq!(row.min_frontier, best);
            }
        }
    }

    #[test]
    fn known_animal_counts() {
        let t = isoperimetric_scan(2, 10).unwrap();
        let counts: Vec<u64> = t.rows.iter().map(|r| r.animals).collect();
        assert_eq!(counts, [1, 2, 6, 19, 63, 216, 760, 2725, 9910, 36446]);
        assert_eq!(t.rows[0].ratio, 4.0);
        assert!((t.rows[1].ratio - 6.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(isoperimetric_scan(2, 11).is_err());
        assert!(isoperimetric_scan(4, 3).is_err());
    }

    #[test]
    fn f_small_values_and_inverse() {
        assert_eq!(f_value(1, 2), 0.0);
        assert_eq!(f_value(2, 2), 1.0);
        assert!((f_value(3, 2) - (1.0 + 2f64.powf(-0.5))).abs() < 1e-15);
        let table = f_table(50, 3);
        for k in 1..=50 {
            assert!((table[k - 1] - f_value(k as u64, 3)).abs() < 1e-13);
        }
        for y in [0.5, 3.0, 17.25] {
            assert!((f_interp(f_inverse(y, 2), 2) - y).abs() < 1e-9);
        }
    }

    #[test]
    fn integral_bracket_holds() {
        let r = f_bracket_check(2, 100_000);
        assert_eq!(r.integral_failures, 0);
        assert_eq!(r.upper_failures, 0);
    }

    #[test]
    fn birth_path_is_deterministic() {
        let a = simulate_birth(1.0, 1.0, 2, 5.0, 3).unwrap();
        let b = simulate_birth(1.0, 1.0, 2, 5.0, 3).unwrap();
        assert_eq!(a.jumps, b.jumps);
        assert_eq!(a.y(0.0), 1);
        assert_eq!(a.x(0.0), 0.0);
        assert!(simulate_birth(0.0, 1.0, 2, 1.0, 0).is_err());
    }

    #[test]
    fn drift_examples() {
        let g = LatticeBox::new(2, 5).unwrap();
        let size = |s: &BTreeSet<Point>| s.len() as f64;
        assert_eq!(exact_drift(size, &[p(0, 0)], &ModelParams::rm(1.5), &g), 6.0);
        let stir = ModelParams::rms_with(0.0, 1.0);
        assert_eq!(exact_drift(size, &[p(0, 0), p(2, 1), p(2, 2)], &stir, &g), 0.0);
        let tree = TruncatedTree::new(2, 4).unwrap();
        let w = |s: &BTreeSet<_>| s.len() as f64;
        assert_eq!(exact_drift(w, &[tree.root()], &ModelParams::rm(1.0), &tree), 3.0);
    }

    #[test]
    fn fkg_cases() {
        let w = fkg_witness(&ModelParams::rms(1.0), 2).unwrap().unwrap();
        assert_eq!((w.from.as_slice(), w.to.as_slice()), ([true, false].as_slice(), [false, true].as_slice()));
        assert_eq!(w.kind, "stirring");
        assert!(fkg_witness(&ModelParams::cps(1.0, 1.0, 0.5), 3).unwrap().is_some());
        assert!(fkg_witness(&ModelParams::cp(2.0, 1.0), 4).unwrap().is_none());
        assert!(fkg_witness(&ModelParams::rm(2.0), 3).unwrap().is_none());
        assert!(fkg_witness(&ModelParams::cps(1.0, 1.0, 0.0), 3).unwrap().is_none());
    }

    #[test]
    fn density_at_time_zero() {
        let g = LatticeBox::new(2, 15).unwrap();
        let opts = DensityOptions { times: vec![0.0, 1.0], replicas: 5, seed: 0, c_hat: 3.5, certified_size: 8 };
        let r = density_check(&g, ModelParams::rms(1.0), &opts).unwrap();
        assert_eq!(r.points[0].frequency.p_hat, 1.0);
    }
}
