use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use ips::cli::{run_config, run_file, selftest_config, RunReport};

#[derive(Parser)]
#[command(name = "ips", about = "Stirring epidemics on lattices and trees", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON configuration file.
    Run { config: PathBuf },
    /// Run the exact-invariant suites.
    Selftest {
        /// Cases per suite.
        #[arg(long, default_value_t = 50)]
        seeds: u64,
    },
    /// Print the version.
    Version,
}

fn report(r: &RunReport) {
    for m in &r.messages {
        println!("{m}");
    }
    println!("wrote {} files to {} (config {})", r.files.len(), r.output.display(), &r.config_hash[..12]);
}

fn run(args: Args) -> anyhow::Result<()> {
    match args.command {
        Command::Run { config } => {
            let r = run_file(&config).with_context(|| format!("running {}", config.display()))?;
            report(&r);
        }
        Command::Selftest { seeds } => {
            let r = run_config(selftest_config(seeds)).context("selftest")?;
            report(&r);
        }
        Command::Version => println!("ips {}", env!("CARGO_PKG_VERSION")),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
