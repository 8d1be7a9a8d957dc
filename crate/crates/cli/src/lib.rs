//! Command-line experiment runner for the energy-harvesting D2D model.
//!
//! `analyze` evaluates the closed-form metrics, `simulate` runs the
//! slot-level Monte Carlo and `validate` compares the two. Each run is
//! described completely by one TOML file; the resolved file (defaults
//! filled in, seed override applied) is logged and stored next to the CSV.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{info, warn};

pub use commands::{CheckStatus, ValidationOptions, ValidationRow};
pub use config::ExperimentConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "d2d-eh",
    version,
    about = "Energy-harvesting D2D underlay: analysis, simulation, validation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the analytical metrics.
    Analyze(RunArgs),
    /// Run the Monte Carlo simulator.
    Simulate(RunArgs),
    /// Compare analysis and simulation against the configured tolerances.
    Validate(RunArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Experiment file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// CSV destination; overrides `output.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `sim.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Analyze(a) | Command::Simulate(a) | Command::Validate(a) => a,
        }
    }
}

/// Loads the experiment named by `args` and applies the overrides.
pub fn resolve_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.sim.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output.csv = Some(out.to_string_lossy().into_owned());
    }
    config.check()?;
    Ok(config)
}

/// Path of the resolved-config companion of a CSV file.
pub fn resolved_config_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.config.toml"))
}

fn open_sink(config: &ExperimentConfig) -> Result<Box<dyn Write>, CliError> {
    match &config.output.csv {
        Some(path) => {
            let path = Path::new(path);
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let companion = resolved_config_path(path);
            std::fs::write(&companion, config.to_toml_string())?;
            info!("resolved config written to {}", companion.display());
            Ok(Box::new(BufWriter::new(File::create(path)?)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            warn!("could not size the thread pool to {n}: {e}");
        }
    }
}

/// Runs one subcommand end to end.
pub fn run(command: &Command, options: ValidationOptions) -> Result<(), CliError> {
    let args = command.args();
    init_threads(args.threads);
    let config = resolve_config(args)?;
    info!("resolved config:\n{}", config.to_toml_string());
    let precision = config.output.precision;
    let sweep = config.sweep_name();
    match command {
        Command::Analyze(_) => {
            let points = commands::analyze(&config)?;
            output::write_metrics(open_sink(&config)?, sweep, &points, precision)
        }
        Command::Simulate(_) => {
            let points = commands::simulate(&config)?;
            output::write_metrics(open_sink(&config)?, sweep, &points, precision)
        }
        Command::Validate(_) => {
            let rows = commands::validate(&config, options)?;
            let table = output::render_validation_table(&rows);
            // The table goes wherever the CSV does not.
            if config.output.csv.is_some() {
                print!("{table}");
            } else {
                eprint!("{table}");
            }
            output::write_validation(open_sink(&config)?, sweep, &rows, precision)?;
            let failed = rows
                .iter()
                .filter(|r| r.status == CheckStatus::Fail)
                .count();
            if failed > 0 {
                Err(CliError::Validation(format!(
                    "{failed} of {} checks out of tolerance",
                    rows.len()
                )))
            } else {
                Ok(())
            }
        }
    }
}
