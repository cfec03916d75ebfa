//! Python bindings. States cross the boundary as lists of complex numbers:
//! a single state is `list[complex]` of length `K`, a time series is
//! `list[list[complex]]`, oldest first.

use std::path::PathBuf;

use ks_narmax::data_gen::{self, InitialCondition};
use ks_narmax::features::Structure;
use ks_narmax::narmax::{self, Orders};
use ks_narmax::reduced::{self, ReducedModel};
use ks_narmax::spectral::C64;
use ks_narmax::validation;
use ks_narmax::Error;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::Unstable { .. } | Error::Integration { .. } | Error::EnsembleFailure { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn flatten(rows: Vec<Vec<C64>>) -> PyResult<(Vec<C64>, usize)> {
    let k = rows.first().map_or(0, Vec::len);
    if k == 0 || rows.iter().any(|r| r.len() != k) {
        return Err(PyValueError::new_err("states must be non-empty rows of equal length"));
    }
    Ok((rows.into_iter().flatten().collect(), k))
}

fn rows(flat: &[C64], k: usize) -> Vec<Vec<C64>> {
    flat.chunks(k).map(<[C64]>::to_vec).collect()
}

fn parse_orders(orders: &str) -> PyResult<Orders> {
    orders.parse().map_err(to_py)
}

/// Settings of a full-model run. Defaults reproduce the standard setup.
#[pyclass(module = "ks_narmax_py")]
pub struct FullRunConfig {
    inner: data_gen::FullRunConfig,
}

#[pymethods]
impl FullRunConfig {
    #[new]
    #[pyo3(signature = (*, length=None, grid_points=None, dt=None, delta=None, transient=None, duration=None, k_modes=None))]
    fn new(
        length: Option<f64>,
        grid_points: Option<usize>,
        dt: Option<f64>,
        delta: Option<f64>,
        transient: Option<f64>,
        duration: Option<f64>,
        k_modes: Option<usize>,
    ) -> PyResult<Self> {
        let mut c = data_gen::FullRunConfig::paper();
        if let Some(v) = length {
            c.length = v;
            c.grid_points = data_gen::default_grid_points(v);
        }
        c.grid_points = grid_points.unwrap_or(c.grid_points);
        c.dt = dt.unwrap_or(c.dt);
        c.delta = delta.unwrap_or(c.delta);
        c.transient = transient.unwrap_or(c.transient);
        c.duration = duration.unwrap_or(c.duration);
        c.k_modes = k_modes.unwrap_or(c.k_modes);
        c.validate().map_err(to_py)?;
        Ok(FullRunConfig { inner: c })
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length
    }

    #[getter]
    fn grid_points(&self) -> usize {
        self.inner.grid_points
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    #[getter]
    fn transient(&self) -> f64 {
        self.inner.transient
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration
    }

    #[getter]
    fn k_modes(&self) -> usize {
        self.inner.k_modes
    }

    /// Start from explicit Fourier coefficients `v_1, v_2, ...`.
    fn with_initial_coefficients(&self, coeffs: Vec<C64>) -> PyResult<Self> {
        let mut c = self.inner.clone();
        c.initial_condition = InitialCondition::Fourier { coeffs: coeffs.iter().map(|z| [z.re, z.im]).collect() };
        c.validate().map_err(to_py)?;
        Ok(FullRunConfig { inner: c })
    }

    fn provenance(&self) -> String {
        self.inner.provenance()
    }

    /// Integrates the full model; the GIL is released meanwhile.
    fn generate(&self, py: Python<'_>) -> PyResult<ObservationSeries> {
        let cfg = self.inner.clone();
        let s = py.detach(move || data_gen::run_full(&cfg)).map_err(to_py)?;
        Ok(ObservationSeries { inner: s })
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "FullRunConfig(length={}, grid_points={}, dt={}, delta={}, transient={}, duration={}, k_modes={})",
            c.length, c.grid_points, c.dt, c.delta, c.transient, c.duration, c.k_modes
        )
    }
}

/// Observed modes `v_1..v_K` every `delta`.
#[pyclass(module = "ks_narmax_py")]
pub struct ObservationSeries {
    inner: data_gen::ObservationSeries,
}

#[pymethods]
impl ObservationSeries {
    /// Wraps raw states; used for data from elsewhere.
    #[new]
    #[pyo3(signature = (states, delta, length))]
    fn new(states: Vec<Vec<C64>>, delta: f64, length: f64) -> PyResult<Self> {
        let (flat, k) = flatten(states)?;
        let meta = data_gen::SeriesMeta {
            length,
            n_full: 0,
            dt: 0.0,
            transient: 0.0,
            initial_condition: "external".into(),
            provenance: String::new(),
            energy_spectrum: Vec::new(),
            max_amplitude: 0.0,
        };
        Ok(ObservationSeries { inner: data_gen::ObservationSeries::new(k, delta, flat, meta).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(ObservationSeries { inner: data_gen::ObservationSeries::load(&path).map_err(to_py)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.meta().length
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn states(&self) -> Vec<Vec<C64>> {
        rows(self.inner.samples(), self.inner.k())
    }

    /// `Re v_k` over time, `mode` 1-based.
    fn real_part(&self, mode: usize) -> PyResult<Vec<f64>> {
        if mode == 0 || mode > self.inner.k() {
            return Err(PyValueError::new_err(format!("mode must lie in 1..={}", self.inner.k())));
        }
        Ok(self.inner.real_part(mode))
    }

    fn window(&self, start: usize, end: usize) -> PyResult<Self> {
        Ok(ObservationSeries { inner: self.inner.window(start, end).map_err(to_py)? })
    }

    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    /// Model-error series `z^{n+1}`, one state per observation interval.
    fn model_error(&self) -> PyResult<Vec<Vec<C64>>> {
        let z = reduced::extract_model_error(&self.inner).map_err(to_py)?;
        Ok(rows(z.values(), z.k()))
    }

    fn __repr__(&self) -> String {
        format!("ObservationSeries(k={}, delta={}, len={})", self.inner.k(), self.inner.delta(), self.inner.len())
    }
}

/// A fitted (or zero) reduced stochastic model.
#[pyclass(module = "ks_narmax_py")]
pub struct NarmaxModel {
    inner: narmax::NarmaxParams,
}

#[pymethods]
impl NarmaxModel {
    /// The deterministic truncated model of `k_modes` modes.
    #[staticmethod]
    fn truncated(k_modes: usize, delta: f64, length: f64) -> Self {
        NarmaxModel { inner: validation::NarmaxForecaster::truncated(k_modes, delta, length).params }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(NarmaxModel { inner: narmax::NarmaxParams::from_json(text).map_err(to_py)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(NarmaxModel { inner: narmax::NarmaxParams::load(&path).map_err(to_py)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    /// `(p, r, q)`.
    #[getter]
    fn orders(&self) -> (usize, usize, usize) {
        let o = self.inner.orders;
        (o.p, o.r, o.q)
    }

    #[getter]
    fn armax(&self) -> bool {
        self.inner.structure == Structure::Armax
    }

    #[getter]
    fn k_modes(&self) -> usize {
        self.inner.k_modes
    }

    #[getter]
    fn sigma2(&self) -> Vec<f64> {
        self.inner.sigma2()
    }

    /// Regressor names, in coefficient order.
    fn regressor_names(&self) -> Vec<String> {
        self.inner.layout().names()
    }

    /// Per-mode coefficient dictionaries with keys `mu, a, b, c, d, sigma2`.
    fn coefficients<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .modes
            .iter()
            .map(|m| {
                let d = PyDict::new(py);
                d.set_item("k", m.k)?;
                d.set_item("mu", m.mu)?;
                d.set_item("a", m.a.clone())?;
                d.set_item("b", m.b.clone())?;
                d.set_item("c", m.c.clone())?;
                d.set_item("d", m.d.clone())?;
                d.set_item("sigma2", m.sigma2)?;
                Ok(d)
            })
            .collect()
    }

    /// States needed to start a simulation.
    fn window_len(&self) -> usize {
        narmax::init_window_len(self.inner.orders)
    }

    /// `steps` states following `window`, drawing noise from stream
    /// `stream` of `seed`.
    #[pyo3(signature = (window, steps, seed=0, stream=0))]
    fn simulate(&self, py: Python<'_>, window: Vec<Vec<C64>>, steps: usize, seed: u64, stream: u64) -> PyResult<Vec<Vec<C64>>> {
        let (flat, k) = flatten(window)?;
        let params = self.inner.clone();
        let traj = py
            .detach(move || narmax::simulate(&params, &flat, steps, &mut narmax::noise_rng(seed, stream)))
            .map_err(to_py)?;
        Ok(rows(&traj.states, k))
    }

    /// Conditional negative log-likelihood on `series`.
    fn neg_log_likelihood(&self, series: &ObservationSeries) -> PyResult<f64> {
        let data = narmax::TrainingData::from_series(&series.inner).map_err(to_py)?;
        narmax::neg_log_likelihood(&self.inner, &data).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("NarmaxModel(orders={}, armax={}, k_modes={})", self.inner.orders, self.armax(), self.inner.k_modes)
    }
}

/// Fits a model of `orders` (such as `"0,2,1"` or `"021"`) to `series`.
#[pyfunction]
#[pyo3(signature = (series, orders, armax=false))]
fn fit(py: Python<'_>, series: &ObservationSeries, orders: &str, armax: bool) -> PyResult<NarmaxModel> {
    let orders = parse_orders(orders)?;
    let structure = if armax { Structure::Armax } else { Structure::Narmax };
    let data = narmax::TrainingData::from_series(&series.inner).map_err(to_py)?;
    let params = py.detach(move || narmax::fit(&data, orders, structure)).map_err(to_py)?;
    Ok(NarmaxModel { inner: params })
}

/// One RK4 step of the truncated dynamics divided by `delta`.
#[pyfunction]
fn rdelta(u: Vec<C64>, length: f64, delta: f64) -> PyResult<Vec<C64>> {
    let mut model = ReducedModel::new(length, u.len()).map_err(to_py)?;
    let mut out = vec![C64::new(0.0, 0.0); u.len()];
    model.rdelta_into(&u, delta, &mut out);
    Ok(out)
}

/// Right-hand side of the truncated system at `u`.
#[pyfunction]
fn truncated_rhs(u: Vec<C64>, length: f64) -> PyResult<Vec<C64>> {
    let state = reduced::ReducedState::new(u).map_err(to_py)?;
    reduced::truncated_rhs(&state, length).map_err(to_py)
}

/// Non-centered autocorrelation for lags `1..=h_max`.
#[pyfunction]
fn acf(x: Vec<f64>, h_max: usize) -> PyResult<Vec<f64>> {
    validation::acf(&x, h_max).map_err(to_py)
}

/// `∫|p - q|` on 64 bins over `±4·std(reference)`.
#[pyfunction]
fn pdf_l1_distance(reference: Vec<f64>, other: Vec<f64>) -> PyResult<f64> {
    validation::pdf_l1_distance(&reference, &other).map_err(to_py)
}

/// Mean energies and energy covariances with batch-means standard errors.
#[pyfunction]
fn energy_stats<'py>(py: Python<'py>, states: Vec<Vec<C64>>) -> PyResult<Bound<'py, PyDict>> {
    let (flat, k) = flatten(states)?;
    let e = validation::energy_stats(&flat, k).map_err(to_py)?;
    let square = |v: &[f64]| rows_f(v, k);
    let d = PyDict::new(py);
    d.set_item("spectrum", e.spectrum.clone())?;
    d.set_item("spectrum_se", e.spectrum_se.clone())?;
    d.set_item("cov", square(&e.cov))?;
    d.set_item("cov_se", square(&e.cov_se))?;
    Ok(d)
}

fn rows_f(v: &[f64], k: usize) -> Vec<Vec<f64>> {
    v.chunks(k).map(<[f64]>::to_vec).collect()
}

#[pymodule]
pub fn ks_narmax_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<FullRunConfig>()?;
    m.add_class::<ObservationSeries>()?;
    m.add_class::<NarmaxModel>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(rdelta, m)?)?;
    m.add_function(wrap_pyfunction!(truncated_rhs, m)?)?;
    m.add_function(wrap_pyfunction!(acf, m)?)?;
    m.add_function(wrap_pyfunction!(pdf_l1_distance, m)?)?;
    m.add_function(wrap_pyfunction!(energy_stats, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
