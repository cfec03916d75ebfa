//! Full-model runs and the observation series they produce.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::etdrk4::Etdrk4;
use crate::format::{self, RawSeries, OBSERVATION_MAGIC};
use crate::spectral::{check_finite, FourierGrid, RhsEvaluator, SpectralField, C64};

/// Initial datum of a full-model run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialCondition {
    /// `v_0(x) = (1 + sin x) cos x`, sampled on the grid.
    SinCos,
    /// Explicit coefficients `v_1, v_2, ...` as `[re, im]` pairs.
    Fourier { coeffs: Vec<[f64; 2]> },
}

impl InitialCondition {
    pub fn label(&self) -> String {
        match self {
            InitialCondition::SinCos => "(1+sin x)cos x".into(),
            InitialCondition::Fourier { coeffs } => format!("fourier[{} modes]", coeffs.len()),
        }
    }

    /// The datum on `grid`, with the mean and Nyquist modes removed.
    pub fn field(&self, grid: &FourierGrid) -> Result<SpectralField> {
        match self {
            InitialCondition::SinCos => {
                let n = grid.n();
                let samples: Vec<f64> = (0..n)
                    .map(|j| {
                        let x = grid.length() * j as f64 / n as f64;
                        (1.0 + x.sin()) * x.cos()
                    })
                    .collect();
                SpectralField::from_physical(grid, &samples)
            }
            InitialCondition::Fourier { coeffs } => {
                let mut v = vec![C64::new(0.0, 0.0); grid.modes()];
                if coeffs.len() + 2 > grid.modes() {
                    return Err(Error::Config(format!(
                        "{} initial coefficients do not fit a grid with {} modes",
                        coeffs.len(),
                        grid.modes()
                    )));
                }
                for (k, c) in coeffs.iter().enumerate() {
                    v[k + 1] = C64::new(c[0], c[1]);
                }
                SpectralField::new(grid, v)
            }
        }
    }
}

/// Parameters of a full-model data-generation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullRunConfig {
    /// Domain period `L`.
    pub length: f64,
    /// Grid size of the full model.
    pub grid_points: usize,
    pub dt: f64,
    /// Observation spacing.
    pub delta: f64,
    /// Discarded spin-up, in time units.
    pub transient: f64,
    /// Observed time span after the transient.
    pub duration: f64,
    /// Number of observed modes `K`.
    pub k_modes: usize,
    pub initial_condition: InitialCondition,
}

impl FullRunConfig {
    /// `L = 2π/√0.085`, `K = 5`, `N = 96`, `dt = 0.001`, `δ = 0.1`,
    /// transient `10^4`, observed span `5·10^4`.
    pub fn paper() -> Self {
        let length = 2.0 * PI / 0.085f64.sqrt();
        FullRunConfig {
            length,
            grid_points: default_grid_points(length),
            dt: 1e-3,
            delta: 0.1,
            transient: 1e4,
            duration: 5e4,
            k_modes: 5,
            initial_condition: InitialCondition::SinCos,
        }
    }

    /// Integer step counts (per observation, transient, number of
    /// observation intervals `T`).
    pub fn step_counts(&self) -> Result<(usize, usize, usize)> {
        let per_obs = integer_ratio(self.delta, self.dt, "delta", "dt")?;
        let transient = if self.transient == 0.0 {
            0
        } else {
            integer_ratio(self.transient, self.dt, "transient", "dt")?
        };
        let t = if self.duration == 0.0 {
            0
        } else {
            integer_ratio(self.duration, self.delta, "duration", "delta")?
        };
        Ok((per_obs, transient, t))
    }

    pub fn validate(&self) -> Result<FourierGrid> {
        if !(self.dt > 0.0 && self.delta > 0.0) {
            return Err(Error::Config("dt and delta must be positive".into()));
        }
        if self.transient < 0.0 || self.duration < 0.0 {
            return Err(Error::Config("transient and duration must be non-negative".into()));
        }
        let grid = FourierGrid::new(self.length, self.grid_points).map_err(|e| Error::Config(e.to_string()))?;
        if self.k_modes == 0 || self.k_modes >= grid.n() / 2 {
            return Err(Error::Config(format!(
                "K = {} must lie in 1..{} for N = {}",
                self.k_modes,
                grid.n() / 2,
                grid.n()
            )));
        }
        self.step_counts()?;
        Ok(grid)
    }

    /// SHA-256 of the canonical JSON form of this configuration.
    pub fn provenance(&self) -> String {
        hex_digest(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

/// `32 * floor(L / 2π)` grid points.
pub fn default_grid_points(length: f64) -> usize {
    32 * (length / (2.0 * PI)).floor().max(1.0) as usize
}

fn integer_ratio(num: f64, den: f64, a: &str, b: &str) -> Result<usize> {
    let ratio = num / den;
    let rounded = ratio.round();
    if rounded < 1.0 || ((ratio - rounded) / rounded).abs() > 1e-12 {
        return Err(Error::Config(format!("{a} = {num} is not an integer multiple of {b} = {den}")));
    }
    Ok(rounded as usize)
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance and summary record stored next to an observation file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub length: f64,
    pub n_full: usize,
    pub dt: f64,
    pub transient: f64,
    pub initial_condition: String,
    /// Hash of the generating configuration.
    pub provenance: String,
    /// Time-averaged `|v_k|^2` of the full state, `k = 0..=N/2`, over the
    /// observed samples.
    #[serde(default)]
    pub energy_spectrum: Vec<f64>,
    /// Largest `|v_k|` seen over the whole run, transient included.
    #[serde(default)]
    pub max_amplitude: f64,
}

/// Observations `v_1..v_K` at `t_n = n δ`, `n = 0..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSeries {
    k: usize,
    delta: f64,
    samples: Vec<C64>,
    meta: SeriesMeta,
}

impl ObservationSeries {
    pub fn new(k: usize, delta: f64, samples: Vec<C64>, meta: SeriesMeta) -> Result<Self> {
        if k == 0 || samples.is_empty() || samples.len() % k != 0 {
            return Err(Error::Argument(format!(
                "{} samples do not form whole {k}-mode states",
                samples.len()
            )));
        }
        if !(delta > 0.0) {
            return Err(Error::Argument(format!("delta must be positive, got {delta}")));
        }
        if meta.dt > 0.0 {
            integer_ratio(delta, meta.dt, "delta", "dt")?;
        }
        check_finite(&samples)?;
        Ok(ObservationSeries { k, delta, samples, meta })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of observation intervals `T` (there are `T + 1` samples).
    pub fn steps(&self) -> usize {
        self.samples.len() / self.k - 1
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(v_1, ..., v_K)` at sample `n`.
    pub fn sample(&self, n: usize) -> &[C64] {
        &self.samples[n * self.k..(n + 1) * self.k]
    }

    /// Time-major flat storage.
    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn meta(&self) -> &SeriesMeta {
        &self.meta
    }

    /// `Re v_k(t_n)` for all `n`; `mode` is 1-based.
    pub fn real_part(&self, mode: usize) -> Vec<f64> {
        self.samples.iter().skip(mode - 1).step_by(self.k).map(|c| c.re).collect()
    }

    /// Samples `start..end` as a new series.
    pub fn window(&self, start: usize, end: usize) -> Result<ObservationSeries> {
        if start >= end || end > self.len() {
            return Err(Error::Argument(format!("window {start}..{end} outside 0..{}", self.len())));
        }
        Ok(ObservationSeries {
            k: self.k,
            delta: self.delta,
            samples: self.samples[start * self.k..end * self.k].to_vec(),
            meta: self.meta.clone(),
        })
    }

    /// SHA-256 of the encoded binary form.
    pub fn content_hash(&self) -> String {
        hex_digest(&format::encode(OBSERVATION_MAGIC, &self.raw()))
    }

    fn raw(&self) -> RawSeries {
        RawSeries { k: self.k, t: self.steps() as u64, delta: self.delta, samples: self.samples.clone() }
    }

    /// Writes `path` and the JSON sidecar `<path>.meta.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        format::write(path, OBSERVATION_MAGIC, &self.raw())?;
        fs::write(meta_path(path), serde_json::to_vec_pretty(&self.meta)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ObservationSeries> {
        let raw = format::read(path, OBSERVATION_MAGIC)?;
        let meta_file = meta_path(path);
        let meta: SeriesMeta = serde_json::from_slice(&fs::read(&meta_file)?)
            .map_err(|e| Error::Format { path: meta_file, detail: e.to_string() })?;
        ObservationSeries::new(raw.k, raw.delta, raw.samples, meta)
            .map_err(|e| Error::Format { path: path.to_path_buf(), detail: e.to_string() })
    }
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Integrates the full model and records the first `K` modes every `δ`
/// after the transient.
pub fn run_full(config: &FullRunConfig) -> Result<ObservationSeries> {
    run_full_with_progress(config, |_| {})
}

/// As [`run_full`], calling `progress(t)` once per observation interval
/// with the current model time.
pub fn run_full_with_progress<F: FnMut(f64)>(config: &FullRunConfig, mut progress: F) -> Result<ObservationSeries> {
    let grid = config.validate()?;
    let (per_obs, transient_steps, t_obs) = config.step_counts()?;
    let mut solver = Etdrk4::new(RhsEvaluator::new(&grid), config.dt)?;
    let mut v = config.initial_condition.field(&grid)?.into_coeffs();
    let modes = grid.modes();
    let k = config.k_modes;

    let mut max_amp = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let blown = |v: &[C64]| v.iter().any(|c| !(c.re.is_finite() && c.im.is_finite()));
    let fail = |step: usize| Error::Integration {
        time: step as f64 * config.dt,
        detail: "non-finite Fourier coefficient".into(),
    };

    let mut step = 0usize;
    while step < transient_steps {
        let chunk = per_obs.min(transient_steps - step);
        for _ in 0..chunk {
            solver.step(&mut v);
        }
        step += chunk;
        if blown(&v) {
            return Err(fail(step));
        }
        max_amp = v.iter().map(|c| c.norm()).fold(max_amp, f64::max);
        progress(step as f64 * config.dt);
    }

    let mut samples = Vec::with_capacity((t_obs + 1) * k);
    let mut energy = vec![0.0; modes];
    let mut record = |v: &[C64], samples: &mut Vec<C64>| {
        samples.extend_from_slice(&v[1..=k]);
        for (e, c) in energy.iter_mut().zip(v) {
            *e += c.norm_sqr();
        }
    };
    record(&v, &mut samples);
    for _ in 0..t_obs {
        for _ in 0..per_obs {
            solver.step(&mut v);
        }
        step += per_obs;
        if blown(&v) {
            return Err(fail(step));
        }
        max_amp = v.iter().map(|c| c.norm()).fold(max_amp, f64::max);
        record(&v, &mut samples);
        progress(step as f64 * config.dt);
    }
    let count = (t_obs + 1) as f64;
    energy.iter_mut().for_each(|e| *e /= count);

    let meta = SeriesMeta {
        length: config.length,
        n_full: grid.n(),
        dt: config.dt,
        transient: config.transient,
        initial_condition: config.initial_condition.label(),
        provenance: config.provenance(),
        energy_spectrum: energy,
        max_amplitude: max_amp,
    };
    ObservationSeries::new(k, config.delta, samples, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> FullRunConfig {
        FullRunConfig {
            length: 2.0 * PI / 0.085f64.sqrt(),
            grid_points: 32,
            dt: 0.01,
            delta: 0.1,
            transient: 2.0,
            duration: 3.0,
            k_modes: 5,
            initial_condition: InitialCondition::SinCos,
        }
    }

    #[test]
    fn paper_defaults() {
        let c = FullRunConfig::paper();
        assert_eq!(c.grid_points, 96);
        assert_eq!(c.step_counts().unwrap(), (100, 10_000_000, 500_000));
    }

    #[test]
    fn zero_duration_gives_single_sample() {
        let mut c = small_config();
        c.duration = 0.0;
        let s = run_full(&c).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.steps(), 0);
    }

    #[test]
    fn samples_equal_strided_fine_run() {
        let c = small_config();
        let coarse = run_full(&c).unwrap();
        let mut fine_cfg = c.clone();
        fine_cfg.delta = c.dt;
        let fine = run_full(&fine_cfg).unwrap();
        assert_eq!(coarse.steps(), 30);
        assert_eq!(fine.steps(), 300);
        for n in 0..=coarse.steps() {
            assert_eq!(coarse.sample(n), fine.sample(10 * n));
        }
    }

    #[test]
    fn delta_must_be_multiple_of_dt() {
        let mut c = small_config();
        c.delta = 0.105;
        assert!(matches!(run_full(&c), Err(Error::Config(_))));
    }

    #[test]
    fn initial_condition_has_zero_mean() {
        let grid = FourierGrid::new(21.55, 96).unwrap();
        let f = InitialCondition::SinCos.field(&grid).unwrap();
        assert_eq!(f.coeffs()[0], C64::new(0.0, 0.0));
        assert_eq!(f.coeffs()[48], C64::new(0.0, 0.0));
    }

    #[test]
    fn blow_up_reports_time() {
        // Far too large a step for an explicit treatment of the quadratic
        // term at this amplitude.
        let mut c = small_config();
        c.dt = 1.0;
        c.delta = 1.0;
        c.transient = 0.0;
        c.duration = 200.0;
        c.initial_condition = InitialCondition::Fourier { coeffs: vec![[50.0, 0.0], [40.0, 10.0]] };
        match run_full(&c) {
            Err(Error::Integration { time, .. }) => assert!(time > 0.0),
            other => panic!("expected an integration error, got {other:?}"),
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.bin");
        let s = run_full(&small_config()).unwrap();
        s.save(&path).unwrap();
        let back = ObservationSeries::load(&path).unwrap();
        assert_eq!(s, back);
        let len = fs::metadata(&path).unwrap().len() as usize;
        assert_eq!(len, format::HEADER_LEN + s.len() * 5 * 16);
    }

    #[test]
    fn truncated_file_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.bin");
        let s = run_full(&small_config()).unwrap();
        s.save(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        assert!(matches!(ObservationSeries::load(&path), Err(Error::Format { .. })));
    }
}
