use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mchain_core::Mode;

mod commands;
mod config;
mod error;
mod format;

use commands::Overrides;
use error::CliError;

/// Reliability of nonlinearly evolving systems via nonhomogeneous Markov chains.
///
/// Exit codes: 0 success, 1 invalid configuration or input, 2 numerical
/// failure, 3 validation outside its bands. Set MCHAIN_REL_LOG (e.g. `info`)
/// for log output on stderr.
#[derive(Debug, Parser)]
#[command(name = "mchain-rel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for output files (overrides `outputs.dir`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Failure-probability mode: `instantaneous` or `absorbing` (overrides `mode`).
    #[arg(long, global = true)]
    mode: Option<Mode>,

    /// Simulation seed (overrides `validate.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-stage failure probability and safe-state statistics.
    Reliability { config: PathBuf },
    /// Stationary distribution of a homogeneous chain.
    Stationary { config: PathBuf },
    /// Compare the analytic chain against Monte Carlo simulation.
    Validate { config: PathBuf },
    /// Statistical distance between two tabulated distributions.
    Distance { p: PathBuf, q: PathBuf },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        out_dir: cli.out_dir,
        mode: cli.mode,
        seed: cli.seed,
    };
    match cli.command {
        Command::Reliability { config } => commands::run_reliability(&config, &overrides),
        Command::Stationary { config } => commands::run_stationary(&config, &overrides),
        Command::Validate { config } => commands::run_validate(&config, &overrides),
        Command::Distance { p, q } => {
            println!("{}", commands::run_distance(&p, &q)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MCHAIN_REL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
