//! Experiment runner for discrete-distribution estimation risk under
//! chi-square loss. Subcommands read a flat JSON config, write CSV results
//! (plus an SVG for tail studies) into --out, and exit 0 when every asserted
//! bound held, 1 when one was violated, 2 on config or I/O problems.
//!
//! Results are byte-identical for a fixed config and master seed, whatever
//! the worker count; wall-clock numbers go to a separate timings.csv.

mod commands;
mod config;
mod csvio;
mod svg;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl From<chi2_core::Error> for CliError {
    fn from(e: chi2_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "chi2",
    version,
    about = "Estimation-risk experiments for discrete distributions under chi-square loss"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo tail of the estimation loss against guarantee thresholds
    TailRisk(RunArgs),
    /// Closed-form add-one risk against a Monte Carlo mean
    Expectation(RunArgs),
    /// Adversarial lower-bound certificates over a parameter grid
    LowerBound(RunArgs),
    /// Inequality audits on realized samples and analytic grids
    Audit(RunArgs),
    /// Threshold table at one (n, d, delta, kappa)
    Thresholds(ThresholdsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (flat JSON object)
    #[arg(long)]
    config: PathBuf,
    /// Directory for results.csv, timings.csv, and any SVG
    #[arg(long)]
    out: PathBuf,
    /// Master seed; overrides the config's master_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to CHI2_WORKERS, then all cores
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ThresholdsArgs {
    /// Table parameters (flat JSON object with n, d, delta, kappa)
    #[arg(long)]
    config: PathBuf,
    /// Optional directory for thresholds.json; the table always prints
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for interface uniformity; the table is deterministic
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to CHI2_WORKERS, then all cores
    #[arg(long)]
    workers: Option<usize>,
}

fn init_workers(flag: Option<usize>) -> CliResult<()> {
    let requested = match flag {
        Some(k) => Some(k),
        None => match std::env::var("CHI2_WORKERS") {
            Ok(raw) => Some(raw.trim().parse::<usize>().map_err(|_| {
                CliError::Config(format!(
                    "CHI2_WORKERS must be a positive integer, got {raw:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(k) = requested {
        if k == 0 {
            return Err(CliError::Config("worker count must be >= 1".into()));
        }
        // Fails only if a pool already exists; results do not depend on the
        // pool size, so that is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global();
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::TailRisk(args) => {
            init_workers(args.workers)?;
            commands::tail_risk::run(&args.config, &args.out, args.seed)
        }
        Command::Expectation(args) => {
            init_workers(args.workers)?;
            commands::expectation::run(&args.config, &args.out, args.seed)
        }
        Command::LowerBound(args) => {
            init_workers(args.workers)?;
            commands::lower_bound::run(&args.config, &args.out, args.seed)
        }
        Command::Audit(args) => {
            init_workers(args.workers)?;
            commands::audit::run(&args.config, &args.out, args.seed)
        }
        Command::Thresholds(args) => {
            init_workers(args.workers)?;
            commands::thresholds::run(&args.config, args.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("assertion violated; see results.csv");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
