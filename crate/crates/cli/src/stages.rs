//! The pipeline stages behind each subcommand. Every stage reads its inputs
//! from the output directory, writes its products there and records both
//! in a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use ks_narmax::data_gen::{run_full_with_progress, ObservationSeries, SeriesMeta};
use ks_narmax::features::Structure;
use ks_narmax::narmax::{fit, init_window_len, noise_rng, simulate, NarmaxParams, Orders, ScanReport, TrainingData};
use ks_narmax::reduced::{extract_model_error, ModelErrorSeries};
use ks_narmax::spectral::C64;
use ks_narmax::validation::{
    acf_comparison, energy_stats, ensemble_forecast, mean_real, pdf_l1_distance, pdf_on_range, real_parts, std_dev,
    AcfComparison, EnergyStats, ForecastReport, Forecaster, NarmaxForecaster, COMPARISON_BINS,
};
use log::{info, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::manifest::Manifest;

/// Largest per-mode pdf L¹ distance accepted for the fitted model.
pub const PDF_L1_TOLERANCE: f64 = 0.1;
/// Largest per-mode ACF distance accepted for the fitted model.
pub const ACF_TOLERANCE: f64 = 0.005;
/// Largest relative error of the per-mode mean energy.
pub const SPECTRUM_TOLERANCE: f64 = 0.3;
/// RMSE level and horizon a forecast must reach.
pub const RMSE_LEVEL: f64 = 2.0;
pub const RMSE_HORIZON: f64 = 40.0;
/// ANCR level and horizon a forecast must reach.
pub const ANCR_LEVEL: f64 = 0.9;
pub const ANCR_HORIZON: f64 = 45.0;

/// File locations inside the output directory.
pub struct Files<'a>(pub &'a Path);

impl Files<'_> {
    pub fn observations(&self) -> PathBuf {
        self.0.join("observations.ksob")
    }

    pub fn model_error(&self) -> PathBuf {
        self.0.join("model_error.ksmz")
    }

    pub fn model(&self, orders: Orders, structure: Structure) -> PathBuf {
        self.0.join(format!("{}_{}.json", prefix(structure), orders.label()))
    }

    pub fn coefficients(&self, orders: Orders, structure: Structure) -> PathBuf {
        self.0.join(format!("{}_coefficients_{}.csv", prefix(structure), orders.label()))
    }
}

fn prefix(structure: Structure) -> &'static str {
    match structure {
        Structure::Narmax => "narmax",
        Structure::Armax => "armax",
    }
}

fn require(path: &Path, what: &'static str, producer: &'static str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingInput { what, path: path.to_path_buf(), producer })
    }
}

fn load_observations(cfg: &ExperimentConfig, man: &mut Manifest) -> Result<ObservationSeries> {
    let path = Files(&cfg.output_dir).observations();
    require(&path, "observation series", "simulate-full")?;
    let series = ObservationSeries::load(&path)?;
    man.input(&path)?;
    if series.k() != cfg.k_modes || series.delta() != cfg.delta {
        return Err(CliError::Usage(format!(
            "{} holds K = {}, delta = {} but the config asks for K = {}, delta = {}; rerun simulate-full",
            path.display(),
            series.k(),
            series.delta(),
            cfg.k_modes,
            cfg.delta
        )));
    }
    Ok(series)
}

fn load_training(cfg: &ExperimentConfig, man: &mut Manifest) -> Result<(ObservationSeries, TrainingData)> {
    let series = load_observations(cfg, man)?;
    let path = Files(&cfg.output_dir).model_error();
    require(&path, "model-error series", "extract")?;
    let z = ModelErrorSeries::load(&path)?;
    man.input(&path)?;
    let data = TrainingData::new(&series, &z)?;
    Ok((series, data))
}

fn load_model(cfg: &ExperimentConfig, path: Option<&Path>, man: &mut Manifest) -> Result<NarmaxParams> {
    let path = path.map(Path::to_path_buf).unwrap_or_else(|| Files(&cfg.output_dir).model(cfg.orders, Structure::Narmax));
    require(&path, "fitted model", "fit")?;
    let params = NarmaxParams::load(&path)?;
    man.input(&path)?;
    if params.k_modes != cfg.k_modes || params.delta != cfg.delta {
        return Err(CliError::Usage(format!("{} was fitted for a different K or delta", path.display())));
    }
    Ok(params)
}

fn truncated(cfg: &ExperimentConfig) -> NarmaxParams {
    NarmaxForecaster::truncated(cfg.k_modes, cfg.delta, cfg.length).params
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_text(path: &Path, text: &str, man: &mut Manifest) -> Result<()> {
    fs::write(path, text)?;
    man.output(path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T, man: &mut Manifest) -> Result<()> {
    let json = serde_json::to_string_pretty(value).map_err(ks_narmax::Error::from)?;
    write_text(path, &(json + "\n"), man)
}

fn csv_line(cells: impl IntoIterator<Item = String>) -> String {
    let mut s = cells.into_iter().collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn finish(man: &Manifest, failures: Vec<String>) -> Result<()> {
    let path = man.write()?;
    info!("manifest written to {}", path.display());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failures.join("; ")))
    }
}

pub fn simulate_full(cfg: &ExperimentConfig) -> Result<()> {
    let mut man = Manifest::new("simulate-full", cfg);
    fs::create_dir_all(&cfg.output_dir)?;
    let full = cfg.full_run();
    let total = full.transient + full.duration;
    let mut next_report = 0.0;
    let series = run_full_with_progress(&full, |t| {
        if t >= next_report {
            info!("full model at t = {t:.0} of {total:.0}");
            next_report += (total / 20.0).max(1.0);
        }
    })?;
    let path = Files(&cfg.output_dir).observations();
    series.save(&path)?;
    man.output(&path)?;
    man.output(&ks_narmax::data_gen::meta_path(&path))?;
    info!("{} observations written to {}", series.len(), path.display());
    finish(&man, Vec::new())
}

pub fn extract(cfg: &ExperimentConfig) -> Result<()> {
    let mut man = Manifest::new("extract", cfg);
    let series = load_observations(cfg, &mut man)?;
    let z = extract_model_error(&series)?;
    let path = Files(&cfg.output_dir).model_error();
    z.save(&path)?;
    man.output(&path)?;
    info!("{} model-error samples written to {}", z.len(), path.display());
    finish(&man, Vec::new())
}

/// Coefficient table: one row per mode.
pub fn coefficients_csv(params: &NarmaxParams) -> String {
    let layout = params.layout();
    let mut names = vec!["k".to_string()];
    names.extend(layout.names());
    names.push("sigma2".into());
    let mut s = csv_line(names);
    for m in &params.modes {
        let mut row = vec![m.k.to_string()];
        row.extend(m.theta().iter().map(f64::to_string));
        row.push(m.sigma2.to_string());
        s.push_str(&csv_line(row));
    }
    s
}

pub fn fit_model(cfg: &ExperimentConfig, orders: Orders, structure: Structure) -> Result<NarmaxParams> {
    let command = match structure {
        Structure::Narmax => format!("fit-{}", orders.label()),
        Structure::Armax => format!("fit-armax-{}", orders.label()),
    };
    let mut man = Manifest::new(&command, cfg);
    let (_, data) = load_training(cfg, &mut man)?;
    info!("fitting orders {orders} ({structure:?}) on {} steps", data.steps());
    let params = fit(&data, orders, structure)?;
    let layout = Files(&cfg.output_dir);
    let path = layout.model(orders, structure);
    params.save(&path)?;
    man.output(&path)?;
    write_text(&layout.coefficients(orders, structure), &coefficients_csv(&params), &mut man)?;
    info!("sigma^2 = {:?}", params.sigma2());
    finish(&man, Vec::new())?;
    Ok(params)
}

/// Scan summary: one CSV of noise variances and one of ACF distances.
pub fn scan(cfg: &ExperimentConfig) -> Result<ScanReport> {
    let mut man = Manifest::new("scan-orders", cfg);
    let (_, data) = load_training(cfg, &mut man)?;
    let report = ks_narmax::narmax::scan_orders(&data, &cfg.scan_options(Structure::Narmax))?;
    let dir = &cfg.output_dir;
    write_json(&dir.join("scan.json"), &report, &mut man)?;

    let k = cfg.k_modes;
    let mut head = vec!["orders".to_string(), "stable".into(), "unstable_step".into()];
    head.extend((1..=k).map(|i| format!("sigma2_{i}")));
    head.push("mean_log_sigma2".into());
    let mut var = csv_line(head);
    let mut head = vec!["orders".to_string()];
    head.extend((1..=k).map(|i| format!("d_{i}")));
    head.push("mean".into());
    let mut acf = csv_line(head);
    for c in &report.cells {
        let mut row = vec![c.orders.label(), c.stable.to_string(), c.unstable_step.map_or(String::new(), |s| s.to_string())];
        match c.sigma2() {
            Some(s) => row.extend(s.iter().map(f64::to_string)),
            None => row.extend(std::iter::repeat_n(String::new(), k)),
        }
        row.push(opt(c.variance_score()));
        var.push_str(&csv_line(row));
        if let Some(d) = &c.acf_distance {
            let mut row = vec![c.orders.label()];
            row.extend(d.iter().map(f64::to_string));
            row.push(opt(c.mean_acf_distance()));
            acf.push_str(&csv_line(row));
        }
        if let Some(p) = &c.params {
            let path = Files(dir).model(c.orders, Structure::Narmax);
            p.save(&path)?;
            man.output(&path)?;
        }
    }
    write_text(&dir.join("noise_variances.csv"), &var, &mut man)?;
    write_text(&dir.join("acf_distances.csv"), &acf, &mut man)?;

    let failures = match report.selected {
        Some(o) => {
            info!("selected orders {o}");
            Vec::new()
        }
        None => vec!["no order in the grid gives a stable reduced system".to_string()],
    };
    finish(&man, failures)?;
    Ok(report)
}

/// Options of `simulate-reduced`.
#[derive(Clone, Debug, Default)]
pub struct ReducedRun {
    pub model: Option<PathBuf>,
    pub truncated: bool,
    pub steps: Option<usize>,
    pub start: Option<usize>,
}

fn window_at(series: &ObservationSeries, start: usize, m: usize) -> Result<(usize, &[C64])> {
    if series.len() < m {
        return Err(CliError::Usage(format!("the series has {} states, the model needs {m} to start", series.len())));
    }
    let s = start.min(series.len() - m);
    let k = series.k();
    Ok((s, &series.samples()[s * k..(s + m) * k]))
}

/// Long run of `params` from the data at `start`; `Err(step)` on blow-up.
fn long_run(
    params: &NarmaxParams,
    series: &ObservationSeries,
    start: usize,
    steps: usize,
    seed: u64,
) -> Result<std::result::Result<Vec<C64>, usize>> {
    let (_, window) = window_at(series, start, init_window_len(params.orders))?;
    match simulate(params, window, steps, &mut noise_rng(seed, 1)) {
        Ok(t) => Ok(Ok(t.states)),
        Err(ks_narmax::Error::Unstable { step }) => Ok(Err(step)),
        Err(e) => Err(e.into()),
    }
}

pub fn simulate_reduced(cfg: &ExperimentConfig, run: &ReducedRun) -> Result<()> {
    let mut man = Manifest::new("simulate-reduced", cfg);
    let series = load_observations(cfg, &mut man)?;
    let (params, name) = if run.truncated {
        (truncated(cfg), "truncated".to_string())
    } else {
        let p = load_model(cfg, run.model.as_deref(), &mut man)?;
        let name = format!("{}_{}", prefix(p.structure), p.orders.label());
        (p, name)
    };
    let steps = run.steps.unwrap_or_else(|| cfg.long_run_steps());
    let m = init_window_len(params.orders);
    let (s, window) = window_at(&series, run.start.unwrap_or(cfg.stability_start), m)?;
    let last = window[(m - 1) * cfg.k_modes..].to_vec();
    let states = match long_run(&params, &series, s, steps, cfg.seed)? {
        Ok(states) => states,
        Err(step) => {
            return finish(&man, vec![format!("reduced system {name} left the bounded region at step {step}")]);
        }
    };
    let mut samples = last;
    samples.extend(states);
    let max_amplitude = samples.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let provenance = hex(format!("{}|{}|{s}|{steps}", params.to_json()?, cfg.seed).as_bytes());
    let meta = SeriesMeta {
        length: cfg.length,
        n_full: 2 * (cfg.k_modes + 1),
        dt: 0.0,
        transient: 0.0,
        initial_condition: format!("observed window ending at sample {}", s + m - 1),
        provenance,
        energy_spectrum: Vec::new(),
        max_amplitude,
    };
    let out = ObservationSeries::new(cfg.k_modes, cfg.delta, samples, meta)?;
    let path = cfg.output_dir.join(format!("reduced_{name}.ksob"));
    out.save(&path)?;
    man.output(&path)?;
    man.output(&ks_narmax::data_gen::meta_path(&path))?;
    info!("{steps} reduced steps written to {}", path.display());
    finish(&man, Vec::new())
}

/// Long-run statistics of one model against the data.
#[derive(Clone, Debug, Serialize)]
pub struct ModelStats {
    pub name: String,
    pub stable: bool,
    pub unstable_step: Option<usize>,
    pub pdf_l1: Option<Vec<f64>>,
    pub acf_distance: Option<Vec<f64>>,
    pub energy: Option<EnergyStats>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationSummary {
    pub data_energy: EnergyStats,
    pub narmax: ModelStats,
    pub truncated: ModelStats,
    pub failures: Vec<String>,
}

struct Evaluated {
    stats: ModelStats,
    states: Option<Vec<C64>>,
    acf: Option<AcfComparison>,
}

fn evaluate(cfg: &ExperimentConfig, name: &str, params: &NarmaxParams, series: &ObservationSeries) -> Result<Evaluated> {
    let k = cfg.k_modes;
    let mut stats =
        ModelStats { name: name.into(), stable: false, unstable_step: None, pdf_l1: None, acf_distance: None, energy: None };
    let states = match long_run(params, series, cfg.stability_start, cfg.long_run_steps(), cfg.seed)? {
        Ok(s) => s,
        Err(step) => {
            warn!("{name} left the bounded region at step {step}");
            stats.unstable_step = Some(step);
            return Ok(Evaluated { stats, states: None, acf: None });
        }
    };
    stats.stable = true;
    let data = series.samples();
    stats.pdf_l1 = Some(
        (1..=k)
            .map(|m| pdf_l1_distance(&real_parts(data, k, m), &real_parts(&states, k, m)))
            .collect::<std::result::Result<_, _>>()?,
    );
    stats.energy = Some(energy_stats(&states, k)?);
    let f = NarmaxForecaster::new(params.clone(), cfg.seed);
    let acf = match acf_comparison(&f, data, &cfg.acf_config(init_window_len(params.orders))) {
        Ok(c) => {
            stats.acf_distance = Some(c.distance.clone());
            Some(c)
        }
        Err(ks_narmax::Error::Unstable { step }) => {
            warn!("{name} blew up during the ACF comparison at step {step}");
            stats.stable = false;
            stats.unstable_step = Some(step);
            None
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Evaluated { stats, states: Some(states), acf })
}

fn pdf_table(cfg: &ExperimentConfig, data: &[C64], runs: &[&Evaluated]) -> Result<String> {
    let k = cfg.k_modes;
    let mut head = Vec::new();
    for m in 1..=k {
        head.push(format!("x_{m}"));
        head.push(format!("data_{m}"));
        for r in runs {
            head.push(format!("{}_{m}", r.stats.name));
        }
    }
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for m in 1..=k {
        let x = real_parts(data, k, m);
        let s = std_dev(&x);
        let p = pdf_on_range(&x, COMPARISON_BINS, -4.0 * s, 4.0 * s)?;
        cols.push(p.centers());
        cols.push(p.density);
        for r in runs {
            cols.push(match &r.states {
                Some(st) => pdf_on_range(&real_parts(st, k, m), COMPARISON_BINS, -4.0 * s, 4.0 * s)?.density,
                None => vec![f64::NAN; COMPARISON_BINS],
            });
        }
    }
    Ok(table(head, &cols))
}

fn table(head: Vec<String>, cols: &[Vec<f64>]) -> String {
    let mut s = csv_line(head);
    let rows = cols.first().map_or(0, Vec::len);
    for r in 0..rows {
        s.push_str(&csv_line(cols.iter().map(|c| if c[r].is_nan() { String::new() } else { c[r].to_string() })));
    }
    s
}

fn acf_table(cfg: &ExperimentConfig, runs: &[&Evaluated]) -> Option<String> {
    let reference = runs.iter().find_map(|r| r.acf.as_ref())?;
    let h = reference.data[0].values.len();
    let mut head = vec!["lag".to_string()];
    let mut cols = vec![(1..=h).map(|i| i as f64 * cfg.delta).collect::<Vec<_>>()];
    for m in 0..cfg.k_modes {
        head.push(format!("data_{}", m + 1));
        cols.push(reference.data[m].values.clone());
        for r in runs {
            head.push(format!("{}_{}", r.stats.name, m + 1));
            cols.push(r.acf.as_ref().map_or_else(|| vec![f64::NAN; h], |c| c.model[m].values.clone()));
        }
    }
    Some(table(head, &cols))
}

fn energy_table(data: &EnergyStats, runs: &[&Evaluated]) -> String {
    let k = data.k_modes;
    let mut head = vec!["k".to_string(), "data".into(), "data_se".into()];
    let mut cols = vec![(1..=k).map(|i| i as f64).collect::<Vec<_>>(), data.spectrum.clone(), data.spectrum_se.clone()];
    for r in runs {
        head.push(r.stats.name.clone());
        head.push(format!("{}_se", r.stats.name));
        match &r.stats.energy {
            Some(e) => {
                cols.push(e.spectrum.clone());
                cols.push(e.spectrum_se.clone());
            }
            None => cols.extend([vec![f64::NAN; k], vec![f64::NAN; k]]),
        }
    }
    table(head, &cols)
}

fn covariance_table(data: &EnergyStats, runs: &[&Evaluated]) -> String {
    let k = data.k_modes;
    let mut head = vec!["k".to_string(), "l".into(), "data".into(), "data_se".into()];
    for r in runs {
        head.push(r.stats.name.clone());
        head.push(format!("{}_se", r.stats.name));
    }
    let mut s = csv_line(head);
    for a in 1..=k {
        for b in a + 1..=k {
            let mut row = vec![a.to_string(), b.to_string(), data.cov(a, b).to_string(), data.cov_se(a, b).to_string()];
            for r in runs {
                match &r.stats.energy {
                    Some(e) => row.extend([e.cov(a, b).to_string(), e.cov_se(a, b).to_string()]),
                    None => row.extend([String::new(), String::new()]),
                }
            }
            s.push_str(&csv_line(row));
        }
    }
    s
}

fn model_failures(stats: &ModelStats, data: &EnergyStats) -> Vec<String> {
    let mut f = Vec::new();
    if !stats.stable {
        f.push(format!("{} is unstable (step {})", stats.name, stats.unstable_step.unwrap_or(0)));
        return f;
    }
    let modes = |v: &[f64], bad: &dyn Fn(usize, f64) -> bool| -> Vec<usize> {
        v.iter().enumerate().filter(|&(i, &x)| bad(i, x)).map(|(i, _)| i + 1).collect()
    };
    if let Some(p) = &stats.pdf_l1 {
        let m = modes(p, &|_, x| !(x < PDF_L1_TOLERANCE));
        if !m.is_empty() {
            f.push(format!("{} pdf L1 distance >= {PDF_L1_TOLERANCE} on modes {m:?}", stats.name));
        }
    }
    if let Some(d) = &stats.acf_distance {
        let m = modes(d, &|_, x| !(x < ACF_TOLERANCE));
        if !m.is_empty() {
            f.push(format!("{} ACF distance >= {ACF_TOLERANCE} on modes {m:?}", stats.name));
        }
    }
    if let Some(e) = &stats.energy {
        let m = modes(&e.spectrum, &|i, x| !((x / data.spectrum[i] - 1.0).abs() <= SPECTRUM_TOLERANCE));
        if !m.is_empty() {
            f.push(format!("{} mean energy off by more than {:.0}% on modes {m:?}", stats.name, SPECTRUM_TOLERANCE * 100.0));
        }
        let pairs: Vec<usize> =
            (1..=data.k_modes).filter(|&l| l != 2 && e.cov(2, l).signum() != data.cov(2, l).signum()).collect();
        if !pairs.is_empty() {
            f.push(format!("{} gets the sign of cov(|v_2|^2, |v_l|^2) wrong for l in {pairs:?}", stats.name));
        }
    }
    f
}

/// Long-run pdfs, ACFs, energy spectrum and covariances of the fitted model
/// and of the truncated model, against the data.
pub fn validate(cfg: &ExperimentConfig, model: Option<&Path>) -> Result<ValidationSummary> {
    let mut man = Manifest::new("validate", cfg);
    let series = load_observations(cfg, &mut man)?;
    let params = load_model(cfg, model, &mut man)?;
    let data = series.samples();
    let data_energy = energy_stats(data, cfg.k_modes)?;
    let narmax = evaluate(cfg, "narmax", &params, &series)?;
    let trunc = evaluate(cfg, "truncated", &truncated(cfg), &series)?;
    let runs = [&narmax, &trunc];

    let dir = &cfg.output_dir;
    write_text(&dir.join("pdf.csv"), &pdf_table(cfg, data, &runs)?, &mut man)?;
    if let Some(t) = acf_table(cfg, &runs) {
        write_text(&dir.join("acf.csv"), &t, &mut man)?;
    }
    write_text(&dir.join("energy_spectrum.csv"), &energy_table(&data_energy, &runs), &mut man)?;
    write_text(&dir.join("energy_covariance.csv"), &covariance_table(&data_energy, &runs), &mut man)?;

    let failures = model_failures(&narmax.stats, &data_energy);
    let summary = ValidationSummary { data_energy, narmax: narmax.stats, truncated: trunc.stats, failures: failures.clone() };
    write_json(&dir.join("validation.json"), &summary, &mut man)?;
    finish(&man, failures)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct ForecastSummary {
    pub reports: Vec<ForecastReport>,
    pub truncated: Option<ForecastReport>,
    pub rmse_horizon: Option<f64>,
    pub ancr_horizon: Option<f64>,
    pub failures: Vec<String>,
}

fn forecast_path_csv(cfg: &ExperimentConfig, params: &NarmaxParams, series: &ObservationSeries) -> Result<String> {
    let k = cfg.k_modes;
    let h = (cfg.forecast.t_lag / cfg.delta).round() as usize;
    let m = init_window_len(params.orders).max(3);
    let (s, window) = window_at(series, cfg.stability_start, m + h)?;
    let window = &window[..m * k];
    let truth = &series.samples()[(s + m) * k..(s + m + h) * k];
    let f = NarmaxForecaster::new(params.clone(), cfg.seed);
    let n = cfg.forecast.n_ens;
    let mut mean = vec![0.0; h * k];
    let mut ok = 0;
    for j in 0..n {
        if let Ok(traj) = f.forecast(window, s, h, u64::MAX - j as u64) {
            mean.iter_mut().zip(&traj).for_each(|(a, b)| *a += b.re);
            ok += 1;
        }
    }
    let trunc = NarmaxForecaster::truncated(k, cfg.delta, cfg.length);
    let tw = &window[(m - 3) * k..];
    let tpath = trunc.forecast(tw, s, h, 0).ok();
    let mut head = vec!["lead_time".to_string()];
    for i in 1..=k {
        head.extend([format!("data_{i}"), format!("ensemble_mean_{i}"), format!("truncated_{i}")]);
    }
    let mut out = csv_line(head);
    for t in 0..h {
        let mut row = vec![((t + 1) as f64 * cfg.delta).to_string()];
        for i in 0..k {
            row.push(truth[t * k + i].re.to_string());
            row.push(if ok > 0 { (mean[t * k + i] / ok as f64).to_string() } else { String::new() });
            row.push(tpath.as_ref().map_or(String::new(), |p| p[t * k + i].re.to_string()));
        }
        out.push_str(&csv_line(row));
    }
    Ok(out)
}

/// Ensemble forecasts over the ensemble-size sweep and the main ensemble
/// size, plus the truncated model as a baseline.
pub fn forecast(cfg: &ExperimentConfig, model: Option<&Path>) -> Result<ForecastSummary> {
    let mut man = Manifest::new("forecast", cfg);
    let series = load_observations(cfg, &mut man)?;
    let params = load_model(cfg, model, &mut man)?;
    let k = cfg.k_modes;
    let data = series.samples();
    let mean_re = mean_real(data, k);
    let window = init_window_len(params.orders);
    let model_f = NarmaxForecaster::new(params.clone(), cfg.seed);

    let mut sizes = cfg.forecast.ensemble_sweep.clone();
    if !sizes.contains(&cfg.forecast.n_ens) {
        sizes.push(cfg.forecast.n_ens);
    }
    sizes.sort_unstable();
    let mut failures = Vec::new();
    let mut reports = Vec::new();
    for &n in &sizes {
        info!("forecasting with {n} members from {} origins", cfg.forecast.n0);
        match ensemble_forecast(&model_f, data, &mean_re, &cfg.forecast_config(n, window)) {
            Ok(r) => reports.push(r),
            Err(e @ ks_narmax::Error::EnsembleFailure { .. }) => failures.push(format!("ensemble of {n}: {e}")),
            Err(e) => return Err(e.into()),
        }
    }
    let trunc_f = NarmaxForecaster::truncated(k, cfg.delta, cfg.length);
    let trunc = match ensemble_forecast(&trunc_f, data, &mean_re, &cfg.forecast_config(1, window.max(3))) {
        Ok(r) => Some(r),
        Err(e @ ks_narmax::Error::EnsembleFailure { .. }) => {
            warn!("truncated model: {e}");
            None
        }
        Err(e) => return Err(e.into()),
    };

    let mut head = vec!["lead_time".to_string()];
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let lead = reports.first().or(trunc.as_ref()).map(|r| r.lead_times.clone()).unwrap_or_default();
    cols.push(lead.clone());
    for r in reports.iter().map(|r| (format!("n_ens_{}", r.n_ens), r)).chain(trunc.iter().map(|r| ("truncated".to_string(), r))) {
        head.extend([format!("rmse_{}", r.0), format!("ancr_{}", r.0)]);
        cols.push(r.1.rmse.clone());
        cols.push(r.1.ancr.clone());
    }
    let dir = &cfg.output_dir;
    if !lead.is_empty() {
        write_text(&dir.join("forecast_skill.csv"), &table(head, &cols), &mut man)?;
    }
    write_text(&dir.join("forecast_path.csv"), &forecast_path_csv(cfg, &params, &series)?, &mut man)?;

    let main = reports.iter().find(|r| r.n_ens == cfg.forecast.n_ens);
    let rmse_horizon = main.map(|r| r.rmse_horizon(RMSE_LEVEL));
    let ancr_horizon = main.map(|r| r.ancr_horizon(ANCR_LEVEL));
    if let (Some(rh), Some(ah)) = (rmse_horizon, ancr_horizon) {
        info!("RMSE < {RMSE_LEVEL} up to {rh:.1}, ANCR > {ANCR_LEVEL} up to {ah:.1}");
        if rh < RMSE_HORIZON {
            failures.push(format!("RMSE stays below {RMSE_LEVEL} only up to lead time {rh:.1}"));
        }
        if ah < ANCR_HORIZON {
            failures.push(format!("ANCR stays above {ANCR_LEVEL} only up to lead time {ah:.1}"));
        }
    }
    let summary = ForecastSummary { reports, truncated: trunc, rmse_horizon, ancr_horizon, failures: failures.clone() };
    write_json(&dir.join("forecast.json"), &summary, &mut man)?;
    finish(&man, failures)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct ArmaxCell {
    pub orders: Orders,
    pub stable: bool,
    pub unstable_step: Option<usize>,
    pub energy_ratio: Option<Vec<f64>>,
    pub pdf_l1: Option<Vec<f64>>,
}

/// Linear-only ablation: fits, long runs, energies and pdfs of ARMAX models.
pub fn armax_ablation(cfg: &ExperimentConfig, orders: &[Orders]) -> Result<Vec<ArmaxCell>> {
    let mut man = Manifest::new("armax", cfg);
    let (series, data) = load_training(cfg, &mut man)?;
    let k = cfg.k_modes;
    let truth = energy_stats(series.samples(), k)?;
    let mut cells = Vec::new();
    for &o in orders {
        info!("ARMAX orders {o}");
        let params = fit(&data, o, Structure::Armax)?;
        let path = Files(&cfg.output_dir).model(o, Structure::Armax);
        params.save(&path)?;
        man.output(&path)?;
        let mut cell = ArmaxCell { orders: o, stable: false, unstable_step: None, energy_ratio: None, pdf_l1: None };
        match long_run(&params, &series, cfg.stability_start, cfg.long_run_steps(), cfg.seed)? {
            Ok(states) => {
                cell.stable = true;
                let e = energy_stats(&states, k)?;
                cell.energy_ratio = Some(e.spectrum.iter().zip(&truth.spectrum).map(|(a, b)| a / b).collect());
                cell.pdf_l1 = Some(
                    (1..=k)
                        .map(|m| pdf_l1_distance(&series.real_part(m), &real_parts(&states, k, m)))
                        .collect::<std::result::Result<_, _>>()?,
                );
            }
            Err(step) => cell.unstable_step = Some(step),
        }
        cells.push(cell);
    }
    let mut head = vec!["orders".to_string(), "stable".into(), "unstable_step".into()];
    head.extend((1..=k).map(|i| format!("energy_ratio_{i}")));
    head.extend((1..=k).map(|i| format!("pdf_l1_{i}")));
    let mut s = csv_line(head);
    for c in &cells {
        let mut row = vec![c.orders.label(), c.stable.to_string(), c.unstable_step.map_or(String::new(), |v| v.to_string())];
        for v in [&c.energy_ratio, &c.pdf_l1] {
            match v {
                Some(v) => row.extend(v.iter().map(f64::to_string)),
                None => row.extend(std::iter::repeat_n(String::new(), k)),
            }
        }
        s.push_str(&csv_line(row));
    }
    write_text(&cfg.output_dir.join("armax_energy.csv"), &s, &mut man)?;
    finish(&man, Vec::new())?;
    Ok(cells)
}

/// Runs every stage in order. Check failures are collected rather than
/// stopping the chain; runtime errors stop it.
pub fn reproduce(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let layout = Files(&cfg.output_dir);
    let obs = layout.observations();
    let reuse = obs.exists()
        && ObservationSeries::load(&obs).is_ok_and(|s| s.meta().provenance == cfg.full_run().provenance());
    if reuse {
        info!("reusing {} (same generating configuration)", obs.display());
    } else {
        simulate_full(cfg)?;
    }
    extract(cfg)?;

    let mut failures = Vec::new();
    let mut soft = |r: Result<()>| -> Result<()> {
        match r {
            Err(CliError::Validation(m)) => {
                warn!("{m}");
                failures.push(m);
                Ok(())
            }
            other => other,
        }
    };
    soft(scan(cfg).map(|_| ()))?;
    fit_model(cfg, cfg.orders, Structure::Narmax)?;
    soft(validate(cfg, None).map(|_| ()))?;
    soft(forecast(cfg, None).map(|_| ()))?;
    let cells = armax_ablation(cfg, &[cfg.orders, Orders { p: 2, r: 1, q: 0 }])?;
    for c in &cells {
        info!("ARMAX {}: stable = {}", c.orders, c.stable);
    }
    Ok(failures)
}
