use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ks_narmax::features::Structure;
use ks_narmax::narmax::Orders;
use ks_narmax_cli::stages::{self, ReducedRun};
use ks_narmax_cli::{CliError, ExperimentConfig, Preset};

/// Fit and validate NARMAX reduced models of the Kuramoto-Sivashinsky equation.
#[derive(Parser)]
#[command(name = "ks-narmax", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Starting configuration; a config file replaces it entirely.
    #[arg(long, global = true, value_enum, default_value = "paper")]
    preset: Preset,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Root seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Observed span after the transient, in time units.
    #[arg(long, global = true)]
    duration: Option<f64>,
    /// Discarded spin-up, in time units.
    #[arg(long, global = true)]
    transient: Option<f64>,
    /// Orders (p,r,q) of the model carried through the later stages.
    #[arg(long, global = true)]
    orders: Option<Orders>,
    /// Write the effective configuration to this file and continue.
    #[arg(long, global = true)]
    dump_config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the full model and store the first K modes.
    SimulateFull,
    /// Extract the model-error series from the observations.
    Extract,
    /// Fit a reduced model.
    Fit {
        /// Fit only the linear terms.
        #[arg(long)]
        armax: bool,
    },
    /// Fit every order in the grid, screen for stability and select one.
    ScanOrders,
    /// Run a fitted (or the truncated) reduced model from a data window.
    SimulateReduced {
        /// Model JSON; defaults to the fitted model of the configured orders.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Run the deterministic truncated model instead.
        #[arg(long, conflicts_with = "model")]
        truncated: bool,
        #[arg(long)]
        steps: Option<usize>,
        /// Data index of the first window state.
        #[arg(long)]
        start: Option<usize>,
    },
    /// Compare long-run statistics of the model with the data.
    Validate {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Ensemble forecasts and their skill.
    Forecast {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run every stage end to end.
    ReproducePaper,
}

fn build_config(c: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::preset(c.preset),
    };
    if let Some(v) = &c.out {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.duration {
        cfg.duration = v;
    }
    if let Some(v) = c.transient {
        cfg.transient = v;
    }
    if let Some(v) = c.orders {
        cfg.orders = v;
    }
    cfg.validate()?;
    if let Some(path) = &c.dump_config {
        cfg.save(path)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = build_config(&cli.common)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    match cli.command {
        Command::SimulateFull => stages::simulate_full(&cfg),
        Command::Extract => stages::extract(&cfg),
        Command::Fit { armax } => {
            let structure = if armax { Structure::Armax } else { Structure::Narmax };
            stages::fit_model(&cfg, cfg.orders, structure).map(|_| ())
        }
        Command::ScanOrders => stages::scan(&cfg).map(|_| ()),
        Command::SimulateReduced { model, truncated, steps, start } => {
            stages::simulate_reduced(&cfg, &ReducedRun { model, truncated, steps, start })
        }
        Command::Validate { model } => stages::validate(&cfg, model.as_deref()).map(|_| ()),
        Command::Forecast { model } => stages::forecast(&cfg, model.as_deref()).map(|_| ()),
        Command::ReproducePaper => {
            let failures = stages::reproduce(&cfg)?;
            if failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::Validation(format!("{} check(s) failed: {}", failures.len(), failures.join("; "))))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
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
