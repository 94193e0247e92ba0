//! `optomech` command-line driver.
//!
//! Exit codes: 0 success (grid points flagged unstable still succeed),
//! 2 configuration error, 3 numerical failure, 4 I/O error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Command;
use error::CliError;

const THREADS_ENV: &str = "OPTOMECH_THREADS";

#[derive(Parser)]
#[command(
    name = "optomech",
    version,
    about = "Phase-noise-suppressed optomechanics: memory fidelity, entanglement, sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    /// TOML configuration file; absent keys take the documented defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output CSV path (default: standard output for memory, entangle and sweep).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Base seed for Monte Carlo streams.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; falls back to the config, then to OPTOMECH_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// key=value applied on top of the config, e.g. params.gamma_c="5 kHz".
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Write-store-read fidelity at one operating point.
    Memory,
    /// Stationary log-negativity at one operating point.
    Entangle,
    /// Grid evaluation of memory or entanglement.
    Sweep,
    /// Monte Carlo cross-check of the moment equations.
    Validate,
    /// Kerr coefficient from material parameters.
    Kerr,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Memory => Command::Memory,
            Sub::Entangle => Command::Entangle,
            Sub::Sweep => Command::Sweep,
            Sub::Validate => Command::Validate,
            Sub::Kerr => Command::Kerr,
        }
    }
}

fn thread_count(flag: Option<usize>, config: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag.or(config) {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{THREADS_ENV}='{v}' is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    let command = Command::from(cli.command);
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut cfg = config::resolve(command, &text, &cli.overrides)?;
    if let Some(seed) = cli.seed {
        cfg.defaults.retain(|d| !d.starts_with("seed ="));
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = Some(out);
    }
    if let Some(n) = thread_count(cli.threads, cfg.threads)? {
        if n == 0 {
            return Err(CliError::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }

    let outcome = run::execute(&cfg)?;
    match command {
        Command::Validate | Command::Kerr => {
            for line in &outcome.summary {
                println!("{line}");
            }
            if let Some(p) = &cfg.out {
                output::emit(Some(p), &outcome.bytes)?;
            }
        }
        _ => {
            output::emit(cfg.out.as_deref(), &outcome.bytes)?;
            for line in &outcome.summary {
                eprintln!("{line}");
            }
        }
    }
    if outcome.numerical_failure {
        return Err(CliError::Numerical("one or more grid points failed numerically".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("optomech: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
