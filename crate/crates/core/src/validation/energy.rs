use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::C64;

/// Batches used for the standard errors of time-averaged moments.
pub const BATCHES: usize = 50;

/// Energy spectrum `⟨|v_k|²⟩` and energy covariances `cov(|v_k|², |v_l|²)`,
/// each with a batch-means standard error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyStats {
    pub spectrum: Vec<f64>,
    pub spectrum_se: Vec<f64>,
    /// Row-major `K × K`.
    pub cov: Vec<f64>,
    pub cov_se: Vec<f64>,
    pub k_modes: usize,
}

impl EnergyStats {
    /// `cov(|v_k|², |v_l|²)` with 1-based modes.
    pub fn cov(&self, k: usize, l: usize) -> f64 {
        self.cov[(k - 1) * self.k_modes + l - 1]
    }

    pub fn cov_se(&self, k: usize, l: usize) -> f64 {
        self.cov_se[(k - 1) * self.k_modes + l - 1]
    }
}

fn moments(e: &[Vec<f64>], lo: usize, hi: usize) -> (Vec<f64>, Vec<f64>) {
    let k = e.len();
    let n = (hi - lo) as f64;
    let means: Vec<f64> = e.iter().map(|s| s[lo..hi].iter().sum::<f64>() / n).collect();
    let mut cov = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let c = (lo..hi).map(|t| (e[a][t] - means[a]) * (e[b][t] - means[b])).sum::<f64>() / n;
            cov[a * k + b] = c;
            cov[b * k + a] = c;
        }
    }
    (means, cov)
}

fn batch_se(values: &[Vec<f64>], full: &[f64]) -> Vec<f64> {
    let nb = values.len() as f64;
    (0..full.len())
        .map(|i| {
            let m = values.iter().map(|v| v[i]).sum::<f64>() / nb;
            let var = values.iter().map(|v| (v[i] - m).powi(2)).sum::<f64>() / (nb - 1.0);
            (var / nb).sqrt()
        })
        .collect()
}

/// Time-averaged energy moments of a flat time-major `K`-mode series.
pub fn energy_stats(states: &[C64], k_modes: usize) -> Result<EnergyStats> {
    if k_modes == 0 || states.len() % k_modes != 0 || states.len() / k_modes < 2 * BATCHES {
        return Err(Error::Argument(format!("need at least {} states for energy statistics", 2 * BATCHES)));
    }
    let times = states.len() / k_modes;
    let e: Vec<Vec<f64>> =
        (0..k_modes).map(|m| (0..times).map(|t| states[t * k_modes + m].norm_sqr()).collect()).collect();
    let (spectrum, cov) = moments(&e, 0, times);
    let size = times / BATCHES;
    let (bm, bc): (Vec<_>, Vec<_>) = (0..BATCHES).map(|b| moments(&e, b * size, (b + 1) * size)).unzip();
    Ok(EnergyStats { spectrum_se: batch_se(&bm, &spectrum), cov_se: batch_se(&bc, &cov), spectrum, cov, k_modes })
}
