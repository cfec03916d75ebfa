//! The `K`-mode Galerkin truncation, its one-step map
//! `u^{n+1} = u^n + δ R^δ(u^n)` (one classical RK4 step of size `δ`), and
//! the model-error series
//!
//! ```text
//! z^{n+1} = (u^{n+1} - u^n)/δ - R^δ(u^n)
//! ```
//!
//! The discretization used for `R^δ` must be the same one used later for
//! prediction; RK4 across the full observation gap is used everywhere.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data_gen::ObservationSeries;
use crate::error::{Error, Result};
use crate::format::{self, RawSeries, MODEL_ERROR_MAGIC};
use crate::spectral::{check_finite, FourierGrid, RhsEvaluator, C64};

/// Resolved modes `u_1..u_K`; `u_{-k} = conj(u_k)` is implied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub u: Vec<C64>,
}

impl ReducedState {
    pub fn new(u: Vec<C64>) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::Argument("reduced state needs at least one mode".into()));
        }
        check_finite(&u)?;
        Ok(ReducedState { u })
    }

    pub fn k(&self) -> usize {
        self.u.len()
    }
}

/// Truncated KSE on the `N = 2(K+1)` grid with reusable buffers.
#[derive(Clone)]
pub struct ReducedModel {
    k: usize,
    rhs: RhsEvaluator,
    full: Vec<C64>,
    full_out: Vec<C64>,
    stage: Vec<C64>,
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
}

impl ReducedModel {
    pub fn new(length: f64, k: usize) -> Result<Self> {
        Self::with_dealiasing(length, k, true)
    }

    /// `dealias = false` forms the quadratic term on the `2(K+1)` grid
    /// itself, so products above mode `K+1` fold back onto resolved modes.
    pub fn with_dealiasing(length: f64, k: usize, dealias: bool) -> Result<Self> {
        if k == 0 {
            return Err(Error::Argument("K must be at least 1".into()));
        }
        let grid = FourierGrid::new(length, 2 * (k + 1))?;
        let z = vec![C64::new(0.0, 0.0); k];
        let rhs = if dealias { RhsEvaluator::new(&grid) } else { RhsEvaluator::with_transform_len(&grid, grid.n()) };
        Ok(ReducedModel {
            k,
            full: vec![C64::new(0.0, 0.0); grid.modes()],
            full_out: vec![C64::new(0.0, 0.0); grid.modes()],
            rhs,
            stage: z.clone(),
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn grid(&self) -> &FourierGrid {
        self.rhs.grid()
    }

    pub fn length(&self) -> f64 {
        self.rhs.grid().length()
    }

    /// Right-hand side of the truncated system for `u = (u_1..u_K)`.
    pub fn truncated_rhs_into(&mut self, u: &[C64], out: &mut [C64]) {
        debug_assert_eq!(u.len(), self.k);
        self.full[1..=self.k].copy_from_slice(u);
        self.rhs.rhs_into(&self.full, &mut self.full_out);
        out.copy_from_slice(&self.full_out[1..=self.k]);
    }

    /// `R^δ(u)`, so that one RK4 step is `u + δ R^δ(u)`.
    pub fn rdelta_into(&mut self, u: &[C64], delta: f64, out: &mut [C64]) {
        let k = self.k;
        let mut k1 = std::mem::take(&mut self.k1);
        let mut k2 = std::mem::take(&mut self.k2);
        let mut k3 = std::mem::take(&mut self.k3);
        let mut k4 = std::mem::take(&mut self.k4);
        let mut stage = std::mem::take(&mut self.stage);

        self.truncated_rhs_into(u, &mut k1);
        for i in 0..k {
            stage[i] = u[i] + k1[i] * (0.5 * delta);
        }
        self.truncated_rhs_into(&stage, &mut k2);
        for i in 0..k {
            stage[i] = u[i] + k2[i] * (0.5 * delta);
        }
        self.truncated_rhs_into(&stage, &mut k3);
        for i in 0..k {
            stage[i] = u[i] + k3[i] * delta;
        }
        self.truncated_rhs_into(&stage, &mut k4);
        for i in 0..k {
            out[i] = (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) / 6.0;
        }

        self.k1 = k1;
        self.k2 = k2;
        self.k3 = k3;
        self.k4 = k4;
        self.stage = stage;
    }

    /// One RK4 step of size `delta`.
    pub fn step_into(&mut self, u: &[C64], delta: f64, out: &mut [C64]) {
        self.rdelta_into(u, delta, out);
        for (o, x) in out.iter_mut().zip(u) {
            *o = x + *o * delta;
        }
    }
}

/// Right-hand side of the `K`-mode truncation on a domain of length `length`.
pub fn truncated_rhs(state: &ReducedState, length: f64) -> Result<Vec<C64>> {
    let mut model = ReducedModel::new(length, state.k())?;
    let mut out = vec![C64::new(0.0, 0.0); state.k()];
    model.truncated_rhs_into(&state.u, &mut out);
    Ok(out)
}

/// One RK4 step of size `delta` of the truncated system.
pub fn rdelta_step(state: &ReducedState, length: f64, delta: f64) -> Result<ReducedState> {
    if !(delta > 0.0) {
        return Err(Error::Argument(format!("delta must be positive, got {delta}")));
    }
    let mut model = ReducedModel::new(length, state.k())?;
    let mut out = vec![C64::new(0.0, 0.0); state.k()];
    model.step_into(&state.u, delta, &mut out);
    Ok(ReducedState { u: out })
}

/// `z^1..=z^T` for an observation series with `T` intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelErrorSeries {
    k: usize,
    delta: f64,
    z: Vec<C64>,
}

impl ModelErrorSeries {
    pub fn new(k: usize, delta: f64, z: Vec<C64>) -> Result<Self> {
        if k == 0 || z.is_empty() || z.len() % k != 0 {
            return Err(Error::Argument(format!("{} values do not form whole {k}-mode states", z.len())));
        }
        check_finite(&z)?;
        Ok(ModelErrorSeries { k, delta, z })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `T`, the number of stored vectors.
    pub fn len(&self) -> usize {
        self.z.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// `z^n` for `n = 1..=T`.
    pub fn at(&self, n: usize) -> &[C64] {
        &self.z[(n - 1) * self.k..n * self.k]
    }

    pub fn values(&self) -> &[C64] {
        &self.z
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let raw = RawSeries { k: self.k, t: self.len() as u64, delta: self.delta, samples: self.z.clone() };
        format::write(path, MODEL_ERROR_MAGIC, &raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = format::read(path, MODEL_ERROR_MAGIC)?;
        ModelErrorSeries::new(raw.k, raw.delta, raw.samples)
            .map_err(|e| Error::Format { path: path.to_path_buf(), detail: e.to_string() })
    }
}

/// Model error of `series` against the truncated map on the series' domain.
pub fn extract_model_error(series: &ObservationSeries) -> Result<ModelErrorSeries> {
    let mut model = ReducedModel::new(series.meta().length, series.k())?;
    extract_with(&mut model, series.samples(), series.delta())
}

/// Model error of a flat time-major state sequence `u^0..=u^T`.
pub fn extract_with(model: &mut ReducedModel, u: &[C64], delta: f64) -> Result<ModelErrorSeries> {
    let k = model.k();
    let steps = u.len() / k;
    if steps < 2 || u.len() % k != 0 {
        return Err(Error::Argument("need at least two states to extract the model error".into()));
    }
    let mut z = vec![C64::new(0.0, 0.0); (steps - 1) * k];
    let mut r = vec![C64::new(0.0, 0.0); k];
    for n in 0..steps - 1 {
        let cur = &u[n * k..(n + 1) * k];
        let next = &u[(n + 1) * k..(n + 2) * k];
        model.rdelta_into(cur, delta, &mut r);
        for i in 0..k {
            z[n * k + i] = (next[i] - cur[i]) / delta - r[i];
        }
    }
    ModelErrorSeries::new(k, delta, z)
}

/// Inverse of [`extract_with`]: iterates `u^{n+1} = u^n + δ R^δ(u^n) + δ z^{n+1}`.
pub fn reconstruct(model: &mut ReducedModel, u0: &[C64], z: &ModelErrorSeries) -> Vec<C64> {
    let k = model.k();
    let delta = z.delta();
    let mut out = Vec::with_capacity((z.len() + 1) * k);
    out.extend_from_slice(u0);
    let mut r = vec![C64::new(0.0, 0.0); k];
    for n in 1..=z.len() {
        let cur = out[(n - 1) * k..n * k].to_vec();
        model.rdelta_into(&cur, delta, &mut r);
        for i in 0..k {
            out.push(cur[i] + r[i] * delta + z.at(n)[i] * delta);
        }
    }
    out
}

/// Persists a model-error series; thin wrapper so callers need not import
/// the container module.
pub fn save_model_error(z: &ModelErrorSeries, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    z.save(path)
}
