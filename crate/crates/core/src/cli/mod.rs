//! Reproducible experiment runner: a JSON configuration in, CSV and JSON
//! files out. Replica `i` always uses seed `seed + i`.

pub mod config;
mod experiments;
pub mod output;
pub mod selftest;

use std::path::{Path, PathBuf};

pub use config::{Experiment, ExperimentConfig, OUTPUT_ROOT_VAR};
pub use output::{emit_snapshots, Output};

use crate::error::Result;

/// Where a run wrote its files and what it has to say.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub output: PathBuf,
    pub config_hash: String,
    pub files: Vec<PathBuf>,
    pub messages: Vec<String>,
}

/// Resolves, echoes and runs a configuration.
pub fn run_config(cfg: ExperimentConfig) -> Result<RunReport> {
    run_resolved(cfg.resolve()?)
}

/// Runs a configuration file; the default output directory is named after
/// the file.
pub fn run_file(path: &Path) -> Result<RunReport> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
    run_resolved(ExperimentConfig::load(path)?.resolve_named(&stem)?)
}

fn run_resolved(cfg: ExperimentConfig) -> Result<RunReport> {
    let hash = cfg.hash();
    let mut out = Output::create(cfg.output_dir(), &hash)?;
    out.text("config.resolved.json", &(cfg.to_json() + "\n"))?;
    let messages = experiments::run(&cfg, &mut out)?;
    Ok(RunReport { output: out.dir().to_path_buf(), config_hash: hash, files: out.files().to_vec(), messages })
}

/// The self-test configuration used by `ips selftest`.
pub fn selftest_config(seeds: u64) -> ExperimentConfig {
    ExperimentConfig {
        experiment: Experiment::Selftest { seeds },
        topology: None,
        model: None,
        horizon: 3.0,
        replicas: 1,
        seed: 0,
        output: None,
    }
}
