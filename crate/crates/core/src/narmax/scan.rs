use serde::Serialize;

use super::{fit, init_window_len, noise_rng, simulate, NarmaxParams, Orders, TrainingData};
use crate::error::{Error, Result};
use crate::features::Structure;
use crate::validation::{acf_comparison, AcfConfig, NarmaxForecaster};

/// Order-scan settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanOptions {
    pub grid: Vec<Orders>,
    pub structure: Structure,
    /// Length of the stability run.
    pub stability_steps: usize,
    /// Data index the stability run starts from.
    pub stability_start: usize,
    pub seed: u64,
    /// ACF comparison for stable cells; skipped when `None`.
    pub acf: Option<AcfConfig>,
    /// Number of lowest-variance stable cells compared by ACF distance.
    pub shortlist: usize,
}

impl ScanOptions {
    /// `p = 0,1,2`, `r = 1,2`, `q = 0,1`.
    pub fn paper_grid() -> Vec<Orders> {
        let mut g = Vec::new();
        for q in 0..=1 {
            for p in 0..=2 {
                for r in 1..=2 {
                    g.push(Orders { p, r, q });
                }
            }
        }
        g
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanCell {
    pub orders: Orders,
    pub params: Option<NarmaxParams>,
    pub stable: bool,
    /// Step at which the stability run left the bounded region.
    pub unstable_step: Option<usize>,
    pub acf_distance: Option<Vec<f64>>,
    pub error: Option<String>,
}

impl ScanCell {
    pub fn sigma2(&self) -> Option<Vec<f64>> {
        self.params.as_ref().map(NarmaxParams::sigma2)
    }

    /// Mean of `ln σ_k²`, the variance score used for ranking.
    pub fn variance_score(&self) -> Option<f64> {
        self.sigma2().map(|s| s.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).sum::<f64>() / s.len() as f64)
    }

    pub fn mean_acf_distance(&self) -> Option<f64> {
        self.acf_distance.as_ref().map(|d| d.iter().sum::<f64>() / d.len() as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub cells: Vec<ScanCell>,
    /// Stable orders, lowest variance score first.
    pub ranking: Vec<Orders>,
    pub selected: Option<Orders>,
}

impl ScanReport {
    pub fn cell(&self, orders: Orders) -> Option<&ScanCell> {
        self.cells.iter().find(|c| c.orders == orders)
    }
}

fn run_cell(data: &TrainingData, orders: Orders, opts: &ScanOptions) -> ScanCell {
    let mut cell = ScanCell { orders, params: None, stable: false, unstable_step: None, acf_distance: None, error: None };
    let params = match fit(data, orders, opts.structure) {
        Ok(p) => p,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    let k = data.k_modes;
    let m = init_window_len(orders);
    let s = opts.stability_start.min(data.steps() + 1 - m);
    let window = &data.u[s * k..(s + m) * k];
    match simulate(&params, window, opts.stability_steps, &mut noise_rng(opts.seed, u64::MAX)) {
        Ok(_) => cell.stable = true,
        Err(Error::Unstable { step }) => cell.unstable_step = Some(step),
        Err(e) => cell.error = Some(e.to_string()),
    }
    if cell.stable {
        if let Some(acf) = &opts.acf {
            let f = NarmaxForecaster::new(params.clone(), opts.seed);
            let cfg = AcfConfig { window: acf.window.max(m), ..*acf };
            match acf_comparison(&f, &data.u, &cfg) {
                Ok(c) => cell.acf_distance = Some(c.distance),
                Err(Error::Unstable { step }) => {
                    cell.stable = false;
                    cell.unstable_step = Some(step);
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
        }
    }
    cell.params = Some(params);
    cell
}

/// Fits every order in the grid, screens for stability with a long run
/// from a data point, ranks the stable ones by noise variance and picks,
/// among the `shortlist` best, the one whose ACFs are closest to the data.
pub fn scan_orders(data: &TrainingData, opts: &ScanOptions) -> Result<ScanReport> {
    if opts.grid.is_empty() {
        return Err(Error::Argument("empty order grid".into()));
    }
    let cells: Vec<ScanCell> = opts
        .grid
        .iter()
        .map(|&o| {
            log::info!("scanning orders {o}");
            run_cell(data, o, opts)
        })
        .collect();
    let mut stable: Vec<&ScanCell> = cells.iter().filter(|c| c.stable && c.error.is_none()).collect();
    stable.sort_by(|a, b| a.variance_score().unwrap().total_cmp(&b.variance_score().unwrap()));
    let ranking: Vec<Orders> = stable.iter().map(|c| c.orders).collect();
    let short = &stable[..opts.shortlist.max(1).min(stable.len())];
    let selected = if short.iter().all(|c| c.acf_distance.is_some()) {
        short
            .iter()
            .min_by(|a, b| a.mean_acf_distance().unwrap().total_cmp(&b.mean_acf_distance().unwrap()))
            .map(|c| c.orders)
    } else {
        short.first().map(|c| c.orders)
    };
    Ok(ScanReport { cells, ranking, selected })
}
