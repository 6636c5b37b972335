//! Command-line runner for the optimization toolkit.
//!
//! Exit codes: 0 on success, 2 for an invalid configuration, 1 for runtime
//! failures. Failures print one JSON object line to stderr.

mod check;
mod config;
mod emit;
mod record;
mod runner;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::{ConfigError, RunConfig};
use emit::{EmitKind, Profile};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "qcontrol",
    version,
    about = "Pulse-shaping optimization runs: constrained spectral-phase flow and differential evolution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one configured run into a record directory.
    Run {
        /// TOML run definition.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the population seed; ignored by the gradient flow.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute every value of a config's sweep axis, one subdirectory each.
    Sweep {
        /// TOML run definition containing a [sweep] table.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the population seed; ignored by the gradient flow.
        #[arg(long)]
        seed: Option<u64>,
        /// Base output directory for the sweep.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the fast invariant suite against the numerical core.
    Check,
    /// Extract a plot-ready table from a run record.
    Emit {
        /// Run record directory (as produced by `run` or `sweep`).
        #[arg(long)]
        record: PathBuf,
        /// Which table to write.
        #[arg(long, value_enum)]
        kind: EmitKind,
        /// Phase profile for population tables.
        #[arg(long, value_enum, default_value = "final")]
        profile: Profile,
        /// Output directory; defaults to the record directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    std::process::exit(match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": format!("{e:#}") })
            );
            if e.downcast_ref::<ConfigError>().is_some() {
                2
            } else {
                1
            }
        }
    });
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let config = load(&config, false)?;
            report_runs(runner::execute(config, out.as_deref(), seed)?)
        }
        Command::Sweep { config, seed, out } => {
            let config = load(&config, true)?;
            report_runs(runner::execute(config, out.as_deref(), seed)?)
        }
        Command::Check => {
            if check::run_checks() == 0 {
                Ok(())
            } else {
                anyhow::bail!("invariant checks failed")
            }
        }
        Command::Emit {
            record,
            kind,
            profile,
            out,
        } => {
            let path = emit::emit(&record, kind, profile, out.as_deref())?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn load(path: &std::path::Path, want_sweep: bool) -> Result<RunConfig> {
    let config = RunConfig::load(path)?;
    match (want_sweep, config.sweep.is_some()) {
        (false, true) => Err(ConfigError {
            problems: vec!["config contains a [sweep] table; use the sweep subcommand".into()],
        }
        .into()),
        (true, false) => Err(ConfigError {
            problems: vec!["sweep needs a [sweep] table in the config".into()],
        }
        .into()),
        _ => Ok(config),
    }
}

fn report_runs(dirs: Vec<PathBuf>) -> Result<()> {
    for dir in dirs {
        println!("{}", dir.display());
    }
    Ok(())
}
