//! `dobstab`: discretization, constraint checks, root loci, frequency
//! responses and simulations of an observer-based servo loop.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Format;
use error::CliError;

/// Environment variable capping the worker threads of sweep commands.
const THREADS_VAR: &str = "DOBSTAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "dobstab", version, about = "Stability analysis and simulation of disturbance-observer servo control")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; omitted fields take the reference defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file (a directory for `simulate` without --sweep). Defaults to stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Parameter sweep `param:lo:hi:count`; param is gain, normalized_gain or alpha.
    #[arg(long, global = true, value_name = "SPEC")]
    sweep: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Zero-order-hold matrices of plant and nominal model, and the observer gain bound.
    Discretize,
    /// Design-constraint checks and eigenvalue classification of each loop.
    Constraints,
    /// Closed-loop eigenvalues over a parameter sweep, with the stability boundary.
    Rootlocus,
    /// Frequency response, gain crossover and phase margin of a loop transfer function.
    Bode,
    /// Observer-based controller against a PID baseline; with --sweep, metrics per parameter value.
    Simulate,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads = raw
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::input(format!("{THREADS_VAR} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(CliError::internal)
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (mut cfg, source) = config::load(cli.config.as_deref())?;
    if let Some(spec) = cli.sweep {
        if !matches!(cli.command, Command::Rootlocus | Command::Simulate) {
            return Err(CliError::input("--sweep applies only to rootlocus and simulate"));
        }
        config::parse_sweep(&spec).map_err(|e| CliError::input(format!("--sweep: {e}")))?;
        cfg.analysis.sweep = Some(spec);
    }
    if let Some(format) = cli.format {
        cfg.output.format = Some(format);
    }
    if let Some(path) = cli.output {
        cfg.output.path = Some(path);
    }
    let resolved = cfg.resolve(&source)?;
    match cli.command {
        Command::Discretize => commands::discretize(&resolved, &source),
        Command::Constraints => commands::constraints(&resolved, &source),
        Command::Rootlocus => commands::rootlocus(&resolved, &source),
        Command::Bode => commands::bode(&resolved, &source),
        Command::Simulate => commands::simulate(&resolved, &source),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
