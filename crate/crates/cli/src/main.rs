//! `repmarket`: runs equilibrium queries, grid sweeps, profit optimizations,
//! ODE trajectories and agent-based simulations from an experiment file.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for runtime
//! errors such as unwritable output.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{config_err, CliError, CliResult};

#[derive(Parser)]
#[command(name = "repmarket", version, about = "Reputation-platform market experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium, payoffs, profit and welfare at one policy (JSON).
    Equilibrium(Common),
    /// Quantities over a two-axis grid (CSV).
    Sweep(Common),
    /// Profit-maximizing accuracy over an (r, kappa) or (r, s) grid (CSV).
    Optimize(Common),
    /// Deterministic replicator trajectory (CSV).
    Integrate(Common),
    /// Finite-population simulation: trajectory CSV and summary JSON.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps and optimizations.
    #[arg(long)]
    jobs: Option<usize>,
    /// Override a config value, e.g. `--set market.r=0.85`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn execute(command: Command) -> CliResult<()> {
    let (common, action): (Common, fn(&config::ExperimentConfig) -> CliResult<()>) = match command {
        Command::Equilibrium(c) => (c, commands::equilibrium),
        Command::Sweep(c) => (c, commands::sweep),
        Command::Optimize(c) => (c, commands::optimize),
        Command::Integrate(c) => (c, commands::integrate_cmd),
        Command::Simulate(c) => (c, commands::simulate),
    };
    let mut cfg = config::load(common.config.as_deref(), &common.overrides)?;
    if common.out.is_some() {
        cfg.out = common.out;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.jobs.is_some() {
        cfg.jobs = common.jobs;
    }
    let threads = match cfg.jobs {
        Some(0) => return Err(config_err("jobs: must be at least 1")),
        Some(n) => n,
        None => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    pool.install(|| action(&cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("repmarket: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
