//! Experiment configuration: one record that drives every stage.

use std::fs;
use std::path::{Path, PathBuf};

use ks_narmax::data_gen::{FullRunConfig, InitialCondition};
use ks_narmax::features::Structure;
use ks_narmax::narmax::{Orders, ScanOptions, MAX_ORDER};
use ks_narmax::validation::{AcfConfig, ForecastConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Named starting points for a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Full-length run: `5·10^4` time units of data, 1000 forecast pieces.
    Paper,
    /// Short run for smoke tests, same physics and tolerances.
    Fast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcfSettings {
    /// Number of data pieces compared.
    pub n0: usize,
    /// Largest lag, in time units.
    pub t_lag: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastSettings {
    /// Number of forecast origins.
    pub n0: usize,
    /// Ensemble size of the main forecast.
    pub n_ens: usize,
    /// Ensemble sizes compared against each other.
    pub ensemble_sweep: Vec<usize>,
    /// Longest lead time, in time units.
    pub t_lag: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub length: f64,
    pub k_modes: usize,
    pub grid_points: usize,
    pub dt: f64,
    pub delta: f64,
    pub transient: f64,
    pub duration: f64,
    pub initial_condition: InitialCondition,
    /// Orders tried by the scan.
    pub orders_grid: Vec<Orders>,
    /// Orders of the model carried through fit, validation and forecasts.
    pub orders: Orders,
    pub seed: u64,
    /// Data index the long model runs start from.
    pub stability_start: usize,
    /// Length of the long model runs; the data length when absent.
    pub stability_steps: Option<usize>,
    /// Stable cells compared by ACF distance during the scan.
    pub shortlist: usize,
    pub acf: AcfSettings,
    pub forecast: ForecastSettings,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let full = FullRunConfig::paper();
        let paper = ExperimentConfig {
            length: full.length,
            k_modes: full.k_modes,
            grid_points: full.grid_points,
            dt: full.dt,
            delta: full.delta,
            transient: full.transient,
            duration: full.duration,
            initial_condition: full.initial_condition,
            orders_grid: ScanOptions::paper_grid(),
            orders: Orders { p: 0, r: 2, q: 1 },
            seed: 20_160_321,
            stability_start: 20_000,
            stability_steps: None,
            shortlist: 2,
            acf: AcfSettings { n0: 100, t_lag: 50.0 },
            forecast: ForecastSettings { n0: 1000, n_ens: 20, ensemble_sweep: vec![1, 5, 20], t_lag: 80.0 },
            output_dir: PathBuf::from("runs/paper"),
        };
        match preset {
            Preset::Paper => paper,
            Preset::Fast => ExperimentConfig {
                transient: 1e3,
                duration: 5e3,
                stability_start: 2000,
                acf: AcfSettings { n0: 100, t_lag: 50.0 },
                forecast: ForecastSettings { n0: 100, n_ens: 5, ensemble_sweep: vec![1, 5], t_lag: 80.0 },
                output_dir: PathBuf::from("runs/fast"),
                ..paper
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.to_json() + "\n")
    }

    pub fn full_run(&self) -> FullRunConfig {
        FullRunConfig {
            length: self.length,
            grid_points: self.grid_points,
            dt: self.dt,
            delta: self.delta,
            transient: self.transient,
            duration: self.duration,
            k_modes: self.k_modes,
            initial_condition: self.initial_condition.clone(),
        }
    }

    /// Observation intervals `T` in the generated series.
    pub fn data_steps(&self) -> usize {
        (self.duration / self.delta).round() as usize
    }

    pub fn long_run_steps(&self) -> usize {
        self.stability_steps.unwrap_or_else(|| self.data_steps())
    }

    pub fn acf_config(&self, window: usize) -> AcfConfig {
        AcfConfig { n0: self.acf.n0, t_lag: self.acf.t_lag, delta: self.delta, window }
    }

    pub fn forecast_config(&self, n_ens: usize, window: usize) -> ForecastConfig {
        ForecastConfig { n0: self.forecast.n0, n_ens, t_lag: self.forecast.t_lag, delta: self.delta, window }
    }

    pub fn scan_options(&self, structure: Structure) -> ScanOptions {
        ScanOptions {
            grid: self.orders_grid.clone(),
            structure,
            stability_steps: self.long_run_steps(),
            stability_start: self.stability_start,
            seed: self.seed,
            acf: Some(self.acf_config(0)),
            shortlist: self.shortlist,
        }
    }

    /// Checks everything downstream stages would otherwise reject late.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        self.full_run().validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.full_run().step_counts().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.orders_grid.is_empty() {
            return bad("orders_grid is empty".into());
        }
        if let Some(o) = self.orders_grid.iter().chain([&self.orders]).find(|o| o.max_lag() > MAX_ORDER) {
            return bad(format!("orders {o} exceed the cap of {MAX_ORDER}"));
        }
        if self.shortlist == 0 {
            return bad("shortlist must be at least 1".into());
        }
        if self.stability_steps == Some(0) {
            return bad("stability_steps must be positive".into());
        }
        if self.acf.n0 == 0 || self.forecast.n0 == 0 {
            return bad("piece counts must be positive".into());
        }
        if self.forecast.n_ens == 0 || self.forecast.ensemble_sweep.iter().any(|&n| n == 0) {
            return bad("ensemble sizes must be positive".into());
        }
        for (name, t) in [("acf.t_lag", self.acf.t_lag), ("forecast.t_lag", self.forecast.t_lag)] {
            let ratio = t / self.delta;
            if !(ratio >= 1.0) || (ratio - ratio.round()).abs() > 1e-9 * ratio {
                return bad(format!("{name} = {t} must be a positive multiple of delta = {}", self.delta));
            }
        }
        Ok(())
    }
}
