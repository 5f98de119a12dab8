//! The exact-invariant suites behind `ips selftest`. Every case is a
//! pathwise property, so a single failure is a bug.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::output::Output;
use crate::coupling::{coupled_run, restart_run};
use crate::dynamics::{additive_union_check, evolve};
use crate::error::{Error, Result};
use crate::particles::evolve_particles;
use crate::randomness::{materialize, EventLog, ModelParams, PoissonField};
use crate::topology::{Graph, LatticeBox, Point, TruncatedTree};
use crate::tree_survival::{drift_crosscheck, random_connected_set};

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Runs `case` for seeds `base..base+n`; an `Err` or `Ok(false)` counts as a
/// failure.
fn suite<F>(name: &'static str, base: u64, n: u64, case: F) -> SuiteResult
where
    F: Fn(u64) -> Result<bool> + Sync,
{
    let outcomes: Vec<Option<String>> = (base..base + n)
        .into_par_iter()
        .map(|seed| match case(seed) {
            Ok(true) => None,
            Ok(false) => Some(format!("seed {seed}: property does not hold")),
            Err(e) => Some(format!("seed {seed}: {e}")),
        })
        .collect();
    let failures = outcomes.iter().filter(|o| o.is_some()).count() as u64;
    SuiteResult { name, cases: n, failures, first_failure: outcomes.into_iter().flatten().next() }
}

fn random_subset<R: Rng>(sites: &[Point], k: usize, rng: &mut R) -> Vec<Point> {
    sites.choose_multiple(rng, k).copied().collect()
}

/// All suites, `seeds` cases each.
pub fn suites(seeds: u64, base: u64) -> Result<Vec<SuiteResult>> {
    let square = LatticeBox::new(2, 8)?;
    let tree = TruncatedTree::new(2, 8)?;
    let o = Point::origin();
    let (e1, e2) = (Point::new(&[1, 0]), Point::new(&[0, 1]));
    let rms = ModelParams::rms(1.0);
    let cps = ModelParams::cps(2.0, 1.0, 1.0);
    let horizon = 3.0;

    let mut out = vec![
        suite("containment", base, seeds, |seed| {
            for p in [rms, cps] {
                coupled_run(&square, &[o], &[o, e1], &[o, e1, e2], p, horizon, seed)?;
                let r = tree.root();
                coupled_run(&tree, &[r], &[r], &[r, tree.parent(r)], p, horizon, seed)?;
            }
            Ok(true)
        }),
        suite("restart", base, seeds, |seed| {
            let triple = coupled_run(&square, &[o], &[o], &[o], cps, horizon, seed)?;
            restart_run(&triple)?;
            Ok(true)
        }),
        suite("additivity", base, seeds, |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sites = LatticeBox::new(2, 3)?.sites();
            let a = random_subset(&sites, rng.random_range(1..5), &mut rng);
            let b = random_subset(&sites, rng.random_range(1..5), &mut rng);
            for p in [rms, cps] {
                let field = PoissonField::new(&square, p, horizon, seed)?;
                if !additive_union_check(&a, &b, &field, horizon)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }),
        suite("particles", base, seeds, |seed| {
            let field = PoissonField::new(&square, rms, horizon, seed)?;
            evolve_particles(&[o, e1], &field, horizon, true)?;
            Ok(true)
        }),
        suite("replay", base, seeds, |seed| {
            let field = PoissonField::new(&square, cps, horizon, seed)?;
            let log = materialize(&field)?;
            let lazy = evolve(&[o], &field, horizon)?;
            let fixed = evolve(&[o], &log, horizon)?;
            let back = EventLog::read_csv(&square, horizon, log.to_csv_string().as_bytes())?;
            Ok(lazy.deltas == fixed.deltas && back.events() == log.events())
        }),
    ];
    out.push(suite("drift-crosscheck", base, seeds, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(2..=5u32);
        let t = TruncatedTree::new(d, 9)?;
        let a = random_connected_set(&t, rng.random_range(1..=6), rng.random_range(0..=2u8), &mut rng);
        let rho = rng.random_range(0.05..0.95);
        let lambda = rng.random_range(0.0..3.0);
        for p in [ModelParams::rms_with(lambda, 1.5), ModelParams::cps(lambda, 0.7, 2.0)] {
            if drift_crosscheck(&t, &a, &p, rho)?.gap > 1e-12 {
                return Ok(false);
            }
        }
        Ok(true)
    }));
    Ok(out)
}

pub(super) fn run(seeds: u64, base: u64, out: &mut Output) -> Result<Vec<String>> {
    let results = suites(seeds, base)?;
    out.csv(
        "selftest.csv",
        "suite,cases,failures",
        results.iter().map(|r| format!("{},{},{}", r.name, r.cases, r.failures)),
    )?;
    out.json("summary.json", &json!({ "suites": results }))?;
    let lines: Vec<String> = results
        .iter()
        .map(|r| {
            let status = if r.passed() { "ok" } else { "FAILED" };
            format!("{:<18} {status} ({} cases, {} failures)", r.name, r.cases, r.failures)
        })
        .collect();
    if let Some(bad) = results.iter().find(|r| !r.passed()) {
        return Err(Error::Invariant(format!(
            "selftest suite {} failed: {}",
            bad.name,
            bad.first_failure.as_deref().unwrap_or("unknown")
        )));
    }
    Ok(lines)
}
