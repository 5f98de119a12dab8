//! Survival on homogeneous trees: the level weight `w_ρ(A) = Σ ρ^{l(x)}`,
//! its exact drift under the stirring dynamics, the resulting bounds on the
//! strong-survival thresholds, and Monte Carlo survival proxies.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::ops::ControlFlow;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::exact_drift;
use crate::dynamics::{Applied, FnObserver, Halt, InfectedSet, Recording, Simulation};
use crate::error::{Error, Result};
use crate::randomness::{ModelKind, ModelParams, PoissonField};
use crate::stats::{wilson, Proportion};
use crate::topology::{Graph, TreeSite, TruncatedTree};

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("ρ must lie in (0, 1), got {rho}")))
    }
}

/// `w_ρ(A) = Σ_{x ∈ A} ρ^{l(x)}`.
pub fn weight(config: &[TreeSite], rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(config.iter().map(|x| rho.powi(x.level())).sum())
}

pub fn is_connected(tree: &TruncatedTree, config: &[TreeSite]) -> bool {
    let set: BTreeSet<TreeSite> = config.iter().copied().collect();
    let Some(&start) = set.iter().next() else {
        return true;
    };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for y in tree.neighbors_of(x) {
            if set.contains(&y) && seen.insert(y) {
                stack.push(y);
            }
        }
    }
    seen.len() == set.len()
}

/// The unique site of minimal level of a connected set.
pub fn lowest_site(config: &[TreeSite]) -> Option<TreeSite> {
    config.iter().copied().min_by_key(|x| x.level())
}

fn interior(tree: &TruncatedTree, x: TreeSite) -> bool {
    tree.contains(x) && !tree.is_boundary(x) && tree.neighbors_of(x).len() == tree.slots()
}

/// Closed-form drift of `w_ρ` for a connected set strictly inside the
/// truncation. With `n` the number of sites at each level,
/// `Σ_x ρ^{l(x)} (#children outside A) = (d - 1/ρ) w + ρ^{l(x₀)-1}`, and the
/// single parent edge leaving `A` sits at `x₀`.
pub fn closed_form_drift(tree: &TruncatedTree, config: &[TreeSite], params: &ModelParams, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    params.validate()?;
    if !matches!(params.kind, ModelKind::RMS | ModelKind::CPS) {
        return Err(Error::Domain(format!("closed form is for stirring models, got {}", params.kind)));
    }
    if config.is_empty() {
        return Err(Error::Domain("closed form needs a nonempty set".into()));
    }
    if let Some(x) = config.iter().find(|&&x| !interior(tree, x)) {
        return Err(Error::Domain(format!("site {x:?} is not strictly inside the truncation")));
    }
    if !is_connected(tree, config) {
        return Err(Error::Domain("closed form assumes a connected set".into()));
    }
    let d = tree.branching() as f64;
    let w = weight(config, rho)?;
    let l0 = lowest_site(config).expect("nonempty").level();
    let (lambda, nu) = (params.lambda, params.nu);
    // ν·g(λ/ν) written so that ν = 0 is allowed
    let down = ((d - 1.0 / rho) * w + rho.powi(l0 - 1)) * ((lambda + nu) * rho - nu);
    let up = ((lambda + nu) / rho - nu) * rho.powi(l0);
    Ok(down + up - params.gamma * w)
}

/// Drift of `w_ρ` by enumeration of all transitions.
pub fn generic_drift(tree: &TruncatedTree, config: &[TreeSite], params: &ModelParams, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let w = |s: &BTreeSet<TreeSite>| s.iter().map(|x| rho.powi(x.level())).sum::<f64>();
    Ok(exact_drift(w, config, params, tree))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Crosscheck {
    pub closed: f64,
    pub generic: f64,
    pub gap: f64,
}

/// Both drift evaluations and their relative gap (absolute when both are
/// tiny).
pub fn drift_crosscheck(tree: &TruncatedTree, config: &[TreeSite], params: &ModelParams, rho: f64) -> Result<Crosscheck> {
    let closed = closed_form_drift(tree, config, params, rho)?;
    let generic = generic_drift(tree, config, params, rho)?;
    let scale = closed.abs().max(generic.abs()).max(1.0);
    Ok(Crosscheck { closed, generic, gap: (closed - generic).abs() / scale })
}

/// `λ*(d) = (d+1)/(2√d) - 1`.
pub fn lambda_star(d: u32) -> f64 {
    (d as f64 + 1.0) / (2.0 * (d as f64).sqrt()) - 1.0
}

/// `f(d) = d² - 4 d^{3/2} - 1`.
pub fn f_poly(d: u32) -> f64 {
    let x = d as f64;
    x * x - 4.0 * x * x.sqrt() - 1.0
}

/// Exact sign of `f(d)`: compares `(d² - 1)²` with `16 d³` in integers.
pub fn f_sign(d: u32) -> Ordering {
    let d = d as u128;
    if d == 0 {
        return Ordering::Less;
    }
    let lhs = (d * d - 1) * (d * d - 1);
    lhs.cmp(&(16 * d * d * d))
}

/// Whether `(d, ν)` lies in the window where the CPS weak-survival upper
/// bound is below the strong-survival lower bound:
/// `ν λ*(d) > ((d+1)ν + 1)/(d-1)`, equivalently `ν f(d) > 2√d`.
pub fn w_membership(d: u32, nu: f64) -> Result<bool> {
    if d < 2 || nu.is_nan() || nu <= 0.0 {
        return Err(Error::Domain(format!("need d ≥ 2 and ν > 0, got d={d}, ν={nu}")));
    }
    if f_sign(d) != Ordering::Greater {
        return Ok(false);
    }
    Ok(nu * f_poly(d) > 2.0 * (d as f64).sqrt())
}

/// The `ν` above which `(d, ν)` is in the window, when `f(d) > 0`.
pub fn w_onset(d: u32) -> Option<f64> {
    (f_sign(d) == Ordering::Greater).then(|| 2.0 * (d as f64).sqrt() / f_poly(d))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub d: u32,
    pub nu: f64,
    pub rms_lo: f64,
    pub rms_hi: f64,
    pub cps_lo: f64,
    pub cps_hi: f64,
    pub cps_weak_hi: f64,
    pub cp_strong_hi: f64,
    pub cp_weak_hi: f64,
    pub in_w: bool,
}

pub fn threshold_row(d: u32, nu: f64) -> Result<ThresholdRow> {
    if d < 2 {
        return Err(Error::Domain(format!("trees need d ≥ 2, got {d}")));
    }
    let x = d as f64;
    let s = x.sqrt();
    Ok(ThresholdRow {
        d,
        nu,
        rms_lo: lambda_star(d),
        rms_hi: (x + 1.0) / (s - 1.0),
        cps_lo: nu * lambda_star(d),
        cps_hi: ((x + 1.0) * nu + 1.0) / (s - 1.0),
        cps_weak_hi: ((x + 1.0) * nu + 1.0) / (x - 1.0),
        cp_strong_hi: 1.0 / (s - 1.0),
        cp_weak_hi: 1.0 / (x - 1.0),
        in_w: w_membership(d, nu)?,
    })
}

pub fn threshold_table(ds: &[u32], nus: &[f64]) -> Result<Vec<ThresholdRow>> {
    let mut rows = Vec::with_capacity(ds.len() * nus.len());
    for &d in ds {
        for &nu in nus {
            rows.push(threshold_row(d, nu)?);
        }
    }
    Ok(rows)
}

/// A random connected set of `size` sites grown from the ancestor of the
/// root at level `-k`, each step adding a uniform site among the in-window
/// neighbors of the current set.
pub fn random_connected_set<R: Rng>(tree: &TruncatedTree, size: usize, k: u8, rng: &mut R) -> Vec<TreeSite> {
    let start = tree.ancestor(k);
    let mut set = BTreeSet::from([start]);
    while set.len() < size {
        let boundary: Vec<TreeSite> = set
            .iter()
            .flat_map(|&x| tree.neighbors_of(x))
            .filter(|y| !set.contains(y) && interior(tree, *y))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        match boundary.choose(rng) {
            Some(&y) => {
                set.insert(y);
            }
            None => break,
        }
    }
    set.into_iter().collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub lambda: f64,
    pub below_threshold: bool,
    pub samples: usize,
    pub violations: usize,
    pub max_drift: f64,
}

#[derive(Clone, Debug)]
pub struct ScanReport {
    pub d: u32,
    pub rho: f64,
    pub rows: Vec<ScanRow>,
    /// A set with positive drift, per row, if any was found.
    pub witnesses: Vec<Option<Vec<TreeSite>>>,
}

/// Evaluates the closed-form drift on the singleton and on `samples` random
/// connected sets (sizes up to `max_size`) for every `λ`, with `ν`, `γ` and
/// the model kind taken from `base`.
pub fn supermartingale_scan(
    d: u32,
    lambdas: &[f64],
    base: ModelParams,
    rho: f64,
    samples: usize,
    max_size: usize,
    seed: u64,
) -> Result<ScanReport> {
    let depth = (max_size as u32 + 4).max(6);
    let tree = TruncatedTree::new(d, depth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sets = vec![vec![tree.root()]];
    for _ in 0..samples {
        let size = rng.random_range(1..=max_size);
        let k = rng.random_range(0..=2u8);
        sets.push(random_connected_set(&tree, size, k, &mut rng));
    }
    let threshold = match base.kind {
        ModelKind::CPS => base.nu * lambda_star(d),
        _ => lambda_star(d),
    };
    let mut rows = Vec::new();
    let mut witnesses = Vec::new();
    for &lambda in lambdas {
        let params = ModelParams { lambda, ..base };
        let mut violations = 0;
        let mut max_drift = f64::NEG_INFINITY;
        let mut witness = None;
        for a in &sets {
            let drift = closed_form_drift(&tree, a, &params, rho)?;
            max_drift = max_drift.max(drift);
            if drift > 0.0 {
                violations += 1;
                witness.get_or_insert_with(|| a.clone());
            }
        }
        rows.push(ScanRow { lambda, below_threshold: lambda < threshold, samples: sets.len(), violations, max_drift });
        witnesses.push(witness);
    }
    Ok(ScanReport { d, rho, rows, witnesses })
}

/// Default truncation depth `⌈1.5 (λ + ν + 1) T⌉`, clamped to what the tree
/// labels can hold. The flag is true when clamping happened.
pub fn default_depth(d: u32, params: &ModelParams, horizon: f64) -> (u32, bool) {
    let want = (1.5 * (params.lambda + params.nu + 1.0) * horizon).ceil().max(1.0) as u32;
    let mut depth = want;
    while depth > 1 && TruncatedTree::new(d, depth).is_err() {
        depth -= 1;
    }
    (depth, depth < want)
}

#[derive(Clone, Debug, Serialize)]
pub struct SurvivalProxy {
    pub horizon: f64,
    /// `ξ_T ≠ ∅`.
    pub weak: Proportion,
    /// The root is infected at some time in `[3T/4, T]`.
    pub strong: Proportion,
    /// Runs in which the infection reached the truncation boundary.
    pub truncated: u64,
    /// Runs stopped by the population cap (counted as surviving, with
    /// unknown root status counted as not reinfected).
    pub capped: u64,
}

/// Weak and strong survival proxies from the root.
pub fn survival_proxy(
    params: ModelParams,
    tree: &TruncatedTree,
    horizon: f64,
    replicas: u64,
    seed: u64,
    max_infected: usize,
) -> Result<SurvivalProxy> {
    let window = 0.75 * horizon;
    let root = tree.root();
    struct Rep {
        alive: bool,
        root_late: bool,
        truncated: bool,
        capped: bool,
    }
    let reps: Vec<Rep> = (0..replicas)
        .into_par_iter()
        .map(|i| -> Result<Rep> {
            let field = PoissonField::new(tree, params, horizon, seed + i)?;
            let mut late = false;
            let mut obs = FnObserver(|ev: &Applied<'_, TreeSite>, _: &InfectedSet<TruncatedTree>| {
                if ev.time >= window && ev.changes.iter().any(|c| c.site == root && c.infected) {
                    late = true;
                }
                ControlFlow::Continue(())
            });
            let traj = Simulation::new(&field, &[root])
                .recording(Recording { deltas: false, hits: false, snapshots: vec![window] })
                .max_infected(max_infected)
                .run_observed(horizon, &mut obs)?;
            let at_window = traj.snapshots.first().is_some_and(|s| s.1.binary_search(&root).is_ok());
            let capped = traj.halt == Halt::Capped;
            Ok(Rep {
                alive: capped || !traj.final_config.is_empty(),
                root_late: late || at_window,
                truncated: traj.boundary_touched,
                capped,
            })
        })
        .collect::<Result<_>>()?;
    let n = reps.len() as u64;
    let count = |f: &dyn Fn(&Rep) -> bool| reps.iter().filter(|r| f(r)).count() as u64;
    Ok(SurvivalProxy {
        horizon,
        weak: wilson(count(&|r| r.alive), n, 1.96),
        strong: wilson(count(&|r| r.root_late), n, 1.96),
        truncated: count(&|r| r.truncated),
        capped: count(&|r| r.capped),
    })
}
