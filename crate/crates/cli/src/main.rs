//! `edgekit`: ingest datasets, train the hybrid detector, run detectors,
//! benchmark them and render comparison sheets.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
//! `EDGEKIT_THREADS` caps the worker thread count.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "edgekit",
    version,
    about = "Hybrid CNN + SVM edge detection and boundary benchmarking"
)]
struct Cli {
    /// Flat key-value TOML file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scan a dataset directory and write a manifest.
    Ingest(commands::ingest::Args),
    /// Train the CNN, the SVM stage, or both into a bundle directory.
    Train(commands::train::Args),
    /// Run one detector on images and write edge-map PNGs.
    Detect(commands::detect::Args),
    /// Benchmark methods on a manifest split: ODS, OIS, AP, PR curves.
    Evaluate(commands::evaluate::Args),
    /// Render side-by-side input and method outputs.
    Compare(commands::compare::Args),
    /// Generate a synthetic shapes dataset.
    FixtureGen(commands::fixture::Args),
}

fn init_threads() -> CliResult {
    let Ok(value) = std::env::var("EDGEKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("EDGEKIT_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn run(cli: Cli) -> CliResult {
    init_threads()?;
    let cfg = config::RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(a) => commands::ingest::run(a, cfg),
        Command::Train(a) => commands::train::run(a, cfg),
        Command::Detect(a) => commands::detect::run(a, cfg),
        Command::Evaluate(a) => commands::evaluate::run(a, cfg),
        Command::Compare(a) => commands::compare::run(a, cfg),
        Command::FixtureGen(a) => commands::fixture::run(a),
    }
}

fn main() -> ExitCode {
    edgekit_core::sys::retain_freed_memory();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("edgekit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
