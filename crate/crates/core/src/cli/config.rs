//! Experiment configuration files (JSON). Every key is checked, defaults are
//! filled in here and nowhere else, and the resolved form is what gets
//! hashed and echoed next to the outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coupling::Component;
use crate::error::{Error, Result};
use crate::randomness::{ModelKind, ModelParams};
use crate::topology::TopologySpec;

/// Environment variable holding the default output root.
pub const OUTPUT_ROOT_VAR: &str = "IPS_OUTPUT_ROOT";
const DEFAULT_OUTPUT_ROOT: &str = "ips-output";

fn default_horizon() -> f64 {
    10.0
}

fn one() -> u64 {
    1
}

fn default_ds() -> Vec<u32> {
    (2..=20).collect()
}

fn default_nus() -> Vec<f64> {
    vec![1.0]
}

fn default_birth_times() -> Vec<f64> {
    vec![1.0, 5.0, 10.0]
}

fn default_k_max() -> u64 {
    1_000_000
}

fn default_cap() -> usize {
    1_000_000
}

fn default_fkg_len() -> usize {
    3
}

fn default_iso_size() -> usize {
    8
}

fn default_samples() -> usize {
    1000
}

fn default_selftest_seeds() -> u64 {
    50
}

fn default_c() -> f64 {
    1.0
}

fn default_birth_d() -> u32 {
    2
}

fn default_component() -> Component {
    Component::Middle
}

/// What to run, with its specific options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// Plain runs with trajectory statistics and optional snapshots.
    Simulate {
        /// Initial sites in the graph's text form; empty means the origin.
        #[serde(default)]
        initial: Vec<String>,
        /// Statistic times; empty means eleven equally spaced times.
        #[serde(default)]
        times: Vec<f64>,
        #[serde(default)]
        snapshots: Vec<f64>,
        /// Export `H_t` instead of `ξ_t` in snapshots.
        #[serde(default)]
        once_infected: bool,
        /// How many replicas (lowest seeds first) get snapshot files.
        #[serde(default = "one")]
        snapshot_replicas: u64,
        /// Infection intervals per site (the space-time picture in d = 1).
        #[serde(default)]
        intervals: bool,
        #[serde(default)]
        event_log: bool,
    },
    /// The three coupled processes from `A ⊆ B ⊆ C`.
    Couple {
        #[serde(default)]
        a: Vec<String>,
        #[serde(default)]
        b: Vec<String>,
        #[serde(default)]
        c: Vec<String>,
    },
    /// The restarted contact process inside the stirring one.
    Restart {},
    /// Growth of the once-infected set from the origin.
    Shape {
        #[serde(default)]
        times: Vec<f64>,
        /// Start of the window used to fit the speed; defaults to a fifth
        /// of the horizon.
        #[serde(default)]
        fit_from: Option<f64>,
        #[serde(default = "one")]
        snapshot_replicas: u64,
    },
    Fixation {
        core_radius: u32,
        #[serde(default)]
        margin: Option<f64>,
        /// Empty means the whole box.
        #[serde(default)]
        initial: Vec<String>,
    },
    /// Times at which tagged particles reach a target site.
    Particles {
        particles: Vec<String>,
        #[serde(default)]
        target: Option<String>,
        /// Absent means the target alone is infected.
        #[serde(default)]
        initial: Option<Vec<String>>,
    },
    /// The pure birth process comparison.
    Birth {
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_birth_d")]
        d: u32,
        #[serde(default = "default_birth_times")]
        times: Vec<f64>,
        #[serde(default = "default_k_max")]
        k_max: u64,
    },
    TreeThresholds {
        #[serde(default = "default_ds")]
        ds: Vec<u32>,
        #[serde(default = "default_nus")]
        nus: Vec<f64>,
    },
    /// Drift of the level weight on random connected sets.
    TreeDrift {
        lambdas: Vec<f64>,
        #[serde(default)]
        rho: Option<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_iso_size")]
        max_size: usize,
    },
    TreeSurvival {
        /// Infection rates to scan; empty means the model's own.
        #[serde(default)]
        lambdas: Vec<f64>,
        #[serde(default = "default_cap")]
        max_infected: usize,
    },
    Fkg {
        #[serde(default = "default_fkg_len")]
        len: usize,
    },
    /// Tail estimates of the growth controls.
    Tails {
        times: Vec<f64>,
        m1: f64,
        m2: f64,
        #[serde(default)]
        targets: Vec<String>,
        #[serde(default = "default_component")]
        component: Component,
    },
    /// Isoperimetric constant and the density bound.
    Density {
        times: Vec<f64>,
        #[serde(default = "default_iso_size")]
        max_size: usize,
    },
    Isoperimetric {
        d: usize,
        #[serde(default = "default_iso_size")]
        max_size: usize,
    },
    /// The exact-invariant suites.
    Selftest {
        #[serde(default = "default_selftest_seeds")]
        seeds: u64,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate { .. } => "simulate",
            Experiment::Couple { .. } => "couple",
            Experiment::Restart {} => "restart",
            Experiment::Shape { .. } => "shape",
            Experiment::Fixation { .. } => "fixation",
            Experiment::Particles { .. } => "particles",
            Experiment::Birth { .. } => "birth",
            Experiment::TreeThresholds { .. } => "tree-thresholds",
            Experiment::TreeDrift { .. } => "tree-drift",
            Experiment::TreeSurvival { .. } => "tree-survival",
            Experiment::Fkg { .. } => "fkg",
            Experiment::Tails { .. } => "tails",
            Experiment::Density { .. } => "density",
            Experiment::Isoperimetric { .. } => "isoperimetric",
            Experiment::Selftest { .. } => "selftest",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub topology: Option<TopologySpec>,
    #[serde(default)]
    pub model: Option<ModelParams>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "one")]
    pub replicas: u64,
    pub seed: u64,
    /// Output directory; resolved against the output root when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

enum Need {
    Nothing,
    Lattice,
    Tree,
    Any,
}

impl ExperimentConfig {
    /// Parses a configuration, reporting syntax and schema errors with their
    /// line and column.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
            Error::Config(format!("{origin}:{}:{}: {msg}", e.line(), e.column()))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Fills in the output directory and checks every field.
    pub fn resolve(self) -> Result<Self> {
        let name = format!("{}-seed{}", self.experiment.name(), self.seed);
        self.resolve_named(&name)
    }

    /// As [`ExperimentConfig::resolve`], naming a default output directory
    /// `name` under the output root.
    pub fn resolve_named(mut self, name: &str) -> Result<Self> {
        if self.output.is_none() {
            let root = std::env::var_os(OUTPUT_ROOT_VAR)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
            self.output = Some(root.join(name));
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::Config(format!("{field}: {why}")));
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad("horizon", format!("must be finite and positive, got {}", self.horizon));
        }
        if self.replicas == 0 {
            return bad("replicas", "must be at least 1".into());
        }
        if self.seed.checked_add(self.replicas).is_none() {
            return bad("seed", "seed + replicas overflows".into());
        }
        if let Some(m) = &self.model {
            m.validate().map_err(|e| Error::Config(format!("model: {e}")))?;
        }
        let times_ok = |field: &str, ts: &[f64]| -> Result<()> {
            match ts.iter().find(|&&t| !(t >= 0.0 && t <= self.horizon)) {
                Some(t) => bad(field, format!("time {t} outside [0, horizon]")),
                None => Ok(()),
            }
        };
        let (need, models): (Need, &[ModelKind]) = match &self.experiment {
            Experiment::Simulate { times, snapshots, .. } => {
                times_ok("experiment.times", times)?;
                times_ok("experiment.snapshots", snapshots)?;
                (Need::Any, &[ModelKind::RM, ModelKind::CP, ModelKind::RMS, ModelKind::CPS])
            }
            Experiment::Couple { .. } => (Need::Any, &[ModelKind::RMS, ModelKind::CPS]),
            Experiment::Restart {} => (Need::Any, &[ModelKind::CPS]),
            Experiment::Shape { times, fit_from, .. } => {
                times_ok("experiment.times", times)?;
                if let Some(f) = fit_from {
                    times_ok("experiment.fit_from", &[*f])?;
                }
                (Need::Lattice, &[ModelKind::RM, ModelKind::CP, ModelKind::RMS, ModelKind::CPS])
            }
            Experiment::Fixation { margin, .. } => {
                if let Some(m) = margin {
                    times_ok("experiment.margin", &[*m])?;
                }
                (Need::Lattice, &[ModelKind::RMS])
            }
            Experiment::Particles { particles, .. } => {
                if particles.is_empty() {
                    return bad("experiment.particles", "at least one particle is needed".into());
                }
                (Need::Lattice, &[ModelKind::RMS, ModelKind::CPS])
            }
            Experiment::Birth { c, d, times, .. } => {
                if c.is_nan() || *c <= 0.0 || *d < 2 {
                    return bad("experiment", format!("birth needs c > 0 and d ≥ 2, got c={c}, d={d}"));
                }
                times_ok("experiment.times", times)?;
                (Need::Nothing, &[ModelKind::RM, ModelKind::CP, ModelKind::RMS, ModelKind::CPS])
            }
            Experiment::TreeThresholds { ds, nus } => {
                if let Some(d) = ds.iter().find(|&&d| d < 2) {
                    return bad("experiment.ds", format!("trees need d ≥ 2, got {d}"));
                }
                if let Some(nu) = nus.iter().find(|&&n| !(n > 0.0 && n.is_finite())) {
                    return bad("experiment.nus", format!("ν must be positive, got {nu}"));
                }
                (Need::Nothing, &[])
            }
            Experiment::TreeDrift { rho, .. } => {
                if let Some(r) = rho {
                    if !(*r > 0.0 && *r < 1.0) {
                        return bad("experiment.rho", format!("must lie in (0, 1), got {r}"));
                    }
                }
                (Need::Tree, &[ModelKind::RMS, ModelKind::CPS])
            }
            Experiment::TreeSurvival { .. } => (Need::Tree, &[ModelKind::RM, ModelKind::CP, ModelKind::RMS, ModelKind::CPS]),
            Experiment::Fkg { len } => {
                if !(2..=20).contains(len) {
                    return bad("experiment.len", format!("must be in 2..=20, got {len}"));
                }
                (Need::Nothing, &[])
            }
            Experiment::Tails { times, .. } => {
                times_ok("experiment.times", times)?;
                (Need::Lattice, &[ModelKind::RMS, ModelKind::CPS])
            }
            Experiment::Density { times, max_size } => {
                times_ok("experiment.times", times)?;
                if !(1..=10).contains(max_size) {
                    return bad("experiment.max_size", format!("must be in 1..=10, got {max_size}"));
                }
                (Need::Lattice, &[ModelKind::RMS])
            }
            Experiment::Isoperimetric { d, max_size } => {
                if !(2..=3).contains(d) || !(1..=10).contains(max_size) {
                    return bad("experiment", format!("need d in 2..=3 and max_size in 1..=10, got d={d}, max_size={max_size}"));
                }
                (Need::Nothing, &[])
            }
            Experiment::Selftest { .. } => (Need::Nothing, &[]),
        };
        let name = self.experiment.name();
        match (need, &self.topology) {
            (Need::Lattice | Need::Tree | Need::Any, None) => {
                return bad("topology", format!("{name} needs a topology"));
            }
            (Need::Lattice, Some(TopologySpec::Tree { .. })) => {
                return bad("topology", format!("{name} runs on a lattice box"));
            }
            (Need::Tree, Some(TopologySpec::Lattice { .. })) => {
                return bad("topology", format!("{name} runs on a tree"));
            }
            _ => {}
        }
        if !models.is_empty() {
            match &self.model {
                None if !matches!(self.experiment, Experiment::Birth { .. }) => {
                    return bad("model", format!("{name} needs a model"));
                }
                Some(m) if !models.contains(&m.kind) => {
                    return bad("model.kind", format!("{name} does not run {}", m.kind));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Canonical JSON of the configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical JSON, in hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn output_dir(&self) -> &Path {
        self.output.as_deref().unwrap_or(Path::new(DEFAULT_OUTPUT_ROOT))
    }
}
