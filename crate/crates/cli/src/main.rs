//! `hypoaudit`: batch runner for kinetic, homogeneous, spectral and sweep experiments.
//!
//! Exit status is 0 when every audit passes, 1 when an audit fails and 2 on
//! configuration or runtime errors.

// `!(x > 0.0)` is the NaN-rejecting form used for config checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "hypoaudit", version, about = "Audit hypocoercive decay estimates numerically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the kinetic equation and audit every output time.
    Simulate(RunArgs),
    /// Integrate the space-homogeneous equation against its algebraic bound.
    Homogeneous(RunArgs),
    /// Compute the weighted Poincaré constants.
    Spectral(RunArgs),
    /// Run kinetic experiments over `sweep.values` concurrently.
    Sweep(RunArgs),
    /// Check the pure inequalities on seeded random functions.
    Audit(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Configuration file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for random test functions; overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Audit random fields without time integration.
    #[arg(long)]
    check_only: bool,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, config::ConfigError> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

type Runner = fn(&ExperimentConfig, &std::path::Path, bool) -> anyhow::Result<commands::Outcome>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&RunArgs, Runner) = match &cli.command {
        Command::Simulate(a) => (a, commands::simulate),
        Command::Homogeneous(a) => (a, commands::homogeneous),
        Command::Spectral(a) => (a, commands::spectral),
        Command::Sweep(a) => (a, commands::sweep),
        Command::Audit(a) => (a, |c, o, _| commands::audit(c, o)),
    };
    let result = load(args).map_err(anyhow::Error::from).and_then(|cfg| run(&cfg, &args.out, args.check_only));
    match result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            if outcome.passed {
                println!("all audits passed; outputs in {}", args.out.display());
                ExitCode::SUCCESS
            } else {
                eprintln!("audit failures; see {}", args.out.join("constants.txt").display());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
