//! Long-run statistics and forecast skill used to compare a reduced model
//! with the full-model data.

mod acf;
mod energy;
mod forecast;
mod pdf;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::C64;

pub use acf::{acf, acf_distance, acf_with_zero, mean_acf, AcfCurve, Pieces};
pub use energy::{energy_stats, EnergyStats, BATCHES};
pub use forecast::{
    ensemble_forecast, member_stream, piece_stride, ForecastConfig, ForecastReport, Forecaster, NarmaxForecaster,
    Replay,
};
pub use pdf::{empirical_pdf, mean, pdf_l1_distance, pdf_on_range, sign_asymmetry, std_dev, Pdf, COMPARISON_BINS};

/// Real parts of mode `mode` (1-based) of a flat time-major series.
pub fn real_parts(states: &[C64], k_modes: usize, mode: usize) -> Vec<f64> {
    states.iter().skip(mode - 1).step_by(k_modes).map(|c| c.re).collect()
}

/// Long-run mean of `Re v_k` for every mode.
pub fn mean_real(states: &[C64], k_modes: usize) -> Vec<f64> {
    (1..=k_modes).map(|m| mean(&real_parts(states, k_modes, m))).collect()
}

/// ACF comparison settings: `n0` pieces spaced `T_lag/δ` apart, lags up to
/// `H = T_lag/δ`, each piece `2H` states long so every lag averages at
/// least `H` products.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AcfConfig {
    pub n0: usize,
    pub t_lag: f64,
    pub delta: f64,
    pub window: usize,
}

impl AcfConfig {
    pub fn lags(&self) -> usize {
        (self.t_lag / self.delta).round() as usize
    }

    pub fn piece_len(&self) -> usize {
        2 * self.lags()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcfComparison {
    pub distance: Vec<f64>,
    pub data: Vec<AcfCurve>,
    pub model: Vec<AcfCurve>,
}

/// Runs the model from each data piece's opening window and compares the
/// ACFs of the real parts that follow.
pub fn acf_comparison(model: &dyn Forecaster, data: &[C64], cfg: &AcfConfig) -> Result<AcfComparison> {
    let k = model.k_modes();
    if cfg.window < model.window_len() {
        return Err(Error::Argument(format!("ACF window {} is shorter than the model needs", cfg.window)));
    }
    let (h, len) = (cfg.lags(), cfg.piece_len());
    let stride = piece_stride(data.len() / k, cfg.n0, h, cfg.window + len)?;
    let split = |flat: &[C64]| (1..=k).map(|m| real_parts(flat, k, m)).collect::<Vec<_>>();
    let pairs: Vec<Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)>> = (0..cfg.n0)
        .into_par_iter()
        .map(|i| {
            let s = i * stride;
            let window = &data[s * k..(s + cfg.window) * k];
            let truth = &data[(s + cfg.window) * k..(s + cfg.window + len) * k];
            let traj = model.forecast(window, s, len, member_stream(i, 0))?;
            Ok((split(truth), split(&traj)))
        })
        .collect();
    let (dp, mp): (Pieces, Pieces) = pairs.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok(AcfComparison { distance: acf_distance(&dp, &mp, h)?, data: mean_acf(&dp, h)?, model: mean_acf(&mp, h)? })
}

/// Writes named columns of equal length as CSV.
pub fn write_csv(path: &Path, header: &[&str], columns: &[Vec<f64>]) -> Result<()> {
    let rows = columns.first().map_or(0, Vec::len);
    if header.len() != columns.len() || columns.iter().any(|c| c.len() != rows) {
        return Err(Error::Argument("CSV columns must match the header and have equal length".into()));
    }
    let mut s = header.join(",");
    s.push('\n');
    for r in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| c[r].to_string()).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    fs::write(path, s)?;
    Ok(())
}
