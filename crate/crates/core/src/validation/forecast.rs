use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::Structure;
use crate::narmax::{init_window_len, noise_rng, simulate, NarmaxParams, Orders};
use crate::spectral::C64;

/// Anything that can continue a window of observed states.
pub trait Forecaster: Sync {
    fn k_modes(&self) -> usize;

    /// Observed states needed before the first forecast step.
    fn window_len(&self) -> usize;

    /// `steps` states following `window`. `start` is the index of the
    /// window's first state in the reference series; `stream` selects an
    /// independent noise stream.
    fn forecast(&self, window: &[C64], start: usize, steps: usize, stream: u64) -> Result<Vec<C64>>;
}

/// The fitted stochastic reduced system.
#[derive(Clone, Debug)]
pub struct NarmaxForecaster {
    pub params: NarmaxParams,
    pub seed: u64,
}

impl NarmaxForecaster {
    pub fn new(params: NarmaxParams, seed: u64) -> Self {
        NarmaxForecaster { params, seed }
    }

    /// The deterministic `K`-mode truncation.
    pub fn truncated(k_modes: usize, delta: f64, length: f64) -> Self {
        let orders = Orders { p: 0, r: 1, q: 0 };
        NarmaxForecaster { params: NarmaxParams::zero(orders, Structure::Narmax, k_modes, delta, length), seed: 0 }
    }
}

impl Forecaster for NarmaxForecaster {
    fn k_modes(&self) -> usize {
        self.params.k_modes
    }

    fn window_len(&self) -> usize {
        init_window_len(self.params.orders)
    }

    fn forecast(&self, window: &[C64], _start: usize, steps: usize, stream: u64) -> Result<Vec<C64>> {
        Ok(simulate(&self.params, window, steps, &mut noise_rng(self.seed, stream))?.states)
    }
}

/// Returns the reference series itself: a perfect forecast.
pub struct Replay<'a> {
    pub states: &'a [C64],
    pub k_modes: usize,
    pub window_len: usize,
}

impl Forecaster for Replay<'_> {
    fn k_modes(&self) -> usize {
        self.k_modes
    }

    fn window_len(&self) -> usize {
        self.window_len
    }

    fn forecast(&self, window: &[C64], start: usize, steps: usize, _stream: u64) -> Result<Vec<C64>> {
        let k = self.k_modes;
        let from = start * k + window.len();
        self.states
            .get(from..from + steps * k)
            .map(<[C64]>::to_vec)
            .ok_or_else(|| Error::Argument("replay runs past the end of the series".into()))
    }
}

/// Noise stream of member `member` of piece `piece`.
pub fn member_stream(piece: usize, member: usize) -> u64 {
    ((piece as u64) << 32) | member as u64
}

/// Ensemble forecast settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ForecastConfig {
    pub n0: usize,
    pub n_ens: usize,
    pub t_lag: f64,
    pub delta: f64,
    /// Observed states handed to the model before the first lead time.
    pub window: usize,
}

impl ForecastConfig {
    pub fn horizon(&self) -> usize {
        (self.t_lag / self.delta).round() as usize
    }
}

/// Offsets `T_lag/δ` apart when they fit, otherwise the widest stride that
/// still fits `n0` pieces of `need` states into `times`.
pub fn piece_stride(times: usize, n0: usize, gap: usize, need: usize) -> Result<usize> {
    if n0 == 0 || times < need {
        return Err(Error::Argument(format!("{times} states cannot hold a piece of {need}")));
    }
    if n0 == 1 || (n0 - 1) * gap + need <= times {
        return Ok(gap.max(1));
    }
    let stride = (times - need) / (n0 - 1);
    if stride == 0 {
        return Err(Error::Argument(format!("{times} states cannot hold {n0} pieces of {need}")));
    }
    log::warn!("pieces spaced {stride} steps apart instead of {gap} to fit {n0} of them");
    Ok(stride)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForecastReport {
    pub lead_times: Vec<f64>,
    pub rmse: Vec<f64>,
    pub ancr: Vec<f64>,
    pub n0: usize,
    pub n_ens: usize,
    pub t_lag: f64,
    pub stride: usize,
    pub failed_members: usize,
}

impl ForecastReport {
    /// Longest lead time up to which every RMSE value stays below `threshold`.
    pub fn rmse_horizon(&self, threshold: f64) -> f64 {
        horizon(&self.lead_times, self.rmse.iter().map(|&r| r < threshold))
    }

    /// Longest lead time up to which every ANCR value stays above `threshold`.
    pub fn ancr_horizon(&self, threshold: f64) -> f64 {
        horizon(&self.lead_times, self.ancr.iter().map(|&a| a > threshold))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lead_time,rmse,ancr\n");
        for ((t, r), a) in self.lead_times.iter().zip(&self.rmse).zip(&self.ancr) {
            s.push_str(&format!("{t},{r},{a}\n"));
        }
        s
    }
}

fn horizon(lead: &[f64], ok: impl Iterator<Item = bool>) -> f64 {
    let n = ok.take_while(|&b| b).count();
    if n == 0 {
        0.0
    } else {
        lead[n - 1]
    }
}

struct PieceSkill {
    sq_err: Vec<f64>,
    corr: Vec<f64>,
    failed: usize,
    used: bool,
}

/// RMSE and anomaly correlation of ensemble-mean forecasts of the real
/// parts, against `data` (flat time-major) with anomalies taken relative to
/// `mean_re`, the long-run mean of `Re v_k`.
pub fn ensemble_forecast(
    model: &dyn Forecaster,
    data: &[C64],
    mean_re: &[f64],
    cfg: &ForecastConfig,
) -> Result<ForecastReport> {
    let k = model.k_modes();
    if cfg.window < model.window_len() || cfg.n_ens == 0 || mean_re.len() != k {
        return Err(Error::Argument(format!(
            "forecast needs a window of at least {} states, at least one member and a {k}-mode mean",
            model.window_len()
        )));
    }
    let h = cfg.horizon();
    let times = data.len() / k;
    let stride = piece_stride(times, cfg.n0, h, cfg.window + h)?;

    let skills: Vec<Result<PieceSkill>> = (0..cfg.n0)
        .into_par_iter()
        .map(|i| {
            let start = i * stride;
            let window = &data[start * k..(start + cfg.window) * k];
            let truth = &data[(start + cfg.window) * k..(start + cfg.window + h) * k];
            let mut sum = vec![C64::new(0.0, 0.0); h * k];
            let mut ok = 0usize;
            let mut failed = 0usize;
            for j in 0..cfg.n_ens {
                match model.forecast(window, start, h, member_stream(i, j)) {
                    Ok(traj) => {
                        sum.iter_mut().zip(&traj).for_each(|(s, x)| *s += x);
                        ok += 1;
                    }
                    Err(Error::Unstable { .. }) => failed += 1,
                    Err(e) => return Err(e),
                }
            }
            let mut sq_err = vec![0.0; h];
            let mut corr = vec![0.0; h];
            if ok > 0 {
                for n in 0..h {
                    let (mut e2, mut dot, mut av2, mut au2) = (0.0, 0.0, 0.0, 0.0);
                    for m in 0..k {
                        let v = truth[n * k + m].re;
                        let u = sum[n * k + m].re / ok as f64;
                        e2 += (v - u).powi(2);
                        let (a, b) = (v - mean_re[m], u - mean_re[m]);
                        dot += a * b;
                        av2 += a * a;
                        au2 += b * b;
                    }
                    sq_err[n] = e2;
                    corr[n] = if av2 > 0.0 && au2 > 0.0 { (dot / (av2 * au2).sqrt()).clamp(-1.0, 1.0) } else { 0.0 };
                }
            }
            Ok(PieceSkill { sq_err, corr, failed, used: ok > 0 })
        })
        .collect();

    let mut sq = vec![0.0; h];
    let mut corr = vec![0.0; h];
    let mut failed = 0;
    let mut used = 0;
    for s in skills {
        let s = s?;
        failed += s.failed;
        if s.used {
            used += 1;
            sq.iter_mut().zip(&s.sq_err).for_each(|(a, b)| *a += b);
            corr.iter_mut().zip(&s.corr).for_each(|(a, b)| *a += b);
        }
    }
    let total = cfg.n0 * cfg.n_ens;
    if failed * 20 > total || used == 0 {
        return Err(Error::EnsembleFailure { failed, total });
    }
    Ok(ForecastReport {
        lead_times: (1..=h).map(|n| n as f64 * cfg.delta).collect(),
        rmse: sq.into_iter().map(|s| (s / used as f64).sqrt()).collect(),
        ancr: corr.into_iter().map(|c| c / used as f64).collect(),
        n0: cfg.n0,
        n_ens: cfg.n_ens,
        t_lag: cfg.t_lag,
        stride,
        failed_members: failed,
    })
}
