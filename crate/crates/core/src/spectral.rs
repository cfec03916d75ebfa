//! Fourier representation of periodic KSE states and the dealiased
//! right-hand side of the Galerkin-truncated mode equations
//!
//! ```text
//! dv_k/dt = (q_k^2 - q_k^4) v_k - (i q_k / 2) * sum_l v_l v_{k-l}
//! ```
//!
//! Only the half spectrum `k = 0..=N/2` is stored; `v_{-k} = conj(v_k)` is
//! implied, so every stored state is a real field by construction.
//!
//! Wavenumbers are `q_k = 2*pi*k/L`. (A later line of the original derivation
//! writes `q_k = kL/2pi`; that form is inconsistent with `floor(L/2pi)`
//! unstable modes and is not used.)

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Periodic domain of length `L` resolved by `N` points (`N/2 + 1` stored modes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct FourierGrid {
    length: f64,
    n: usize,
    wavenumbers: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    length: f64,
    n: usize,
}

impl TryFrom<GridSpec> for FourierGrid {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Self> {
        FourierGrid::new(s.length, s.n)
    }
}

impl From<FourierGrid> for GridSpec {
    fn from(g: FourierGrid) -> Self {
        GridSpec { length: g.length, n: g.n }
    }
}

impl FourierGrid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Argument(format!("domain length must be positive, got {length}")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::Argument(format!("grid size must be even and >= 4, got {n}")));
        }
        let wavenumbers = (0..=n / 2).map(|k| 2.0 * PI * k as f64 / length).collect();
        Ok(FourierGrid { length, n, wavenumbers })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored coefficients, `N/2 + 1`.
    pub fn modes(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn wavenumber(&self, k: usize) -> f64 {
        self.wavenumbers[k]
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Count of linearly unstable modes, i.e. `k >= 1` with `q_k <= 1`.
    pub fn unstable_modes(&self) -> usize {
        self.wavenumbers[1..].iter().filter(|&&q| q <= 1.0).count()
    }

    /// Eigenvalues `q_k^2 - q_k^4` of the linear part.
    pub fn linear_symbol(&self) -> Vec<f64> {
        linear_symbol(self)
    }
}

/// `lambda_k = q_k^2 - q_k^4` for `k = 0..=N/2`.
pub fn linear_symbol(grid: &FourierGrid) -> Vec<f64> {
    grid.wavenumbers.iter().map(|q| q * q - q.powi(4)).collect()
}

/// Number of points used for the dealiased products: the smallest even
/// length `>= 3N/2`.
pub fn padded_len(n: usize) -> usize {
    let m = (3 * n).div_ceil(2);
    m + m % 2
}

/// Half-spectrum of a real periodic field with `v_0 = v_{N/2} = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: FourierGrid,
    coeffs: Vec<C64>,
}

impl SpectralField {
    pub fn zeros(grid: &FourierGrid) -> Self {
        SpectralField { coeffs: vec![C64::new(0.0, 0.0); grid.modes()], grid: grid.clone() }
    }

    /// Wraps `coeffs[k] = v_k`, `k = 0..=N/2`. Rejects non-finite values and
    /// a nonzero mean or Nyquist coefficient.
    pub fn new(grid: &FourierGrid, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.modes() {
            return Err(Error::Argument(format!(
                "expected {} coefficients, got {}",
                grid.modes(),
                coeffs.len()
            )));
        }
        check_finite(&coeffs)?;
        let nyq = grid.n / 2;
        if coeffs[0] != C64::new(0.0, 0.0) || coeffs[nyq] != C64::new(0.0, 0.0) {
            return Err(Error::InvalidState("v_0 and v_{N/2} must vanish".into()));
        }
        Ok(SpectralField { grid: grid.clone(), coeffs })
    }

    /// Builds the state from samples `v(x_j)`, `x_j = jL/N`, discarding the
    /// mean and the Nyquist mode.
    pub fn from_physical(grid: &FourierGrid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.n {
            return Err(Error::Argument(format!(
                "expected {} samples, got {}",
                grid.n,
                samples.len()
            )));
        }
        let mut planner = RealFftPlanner::<f64>::new();
        let r2c = planner.plan_fft_forward(grid.n);
        let mut input = samples.to_vec();
        let mut out = r2c.make_output_vec();
        r2c.process(&mut input, &mut out)
            .map_err(|e| Error::Argument(format!("transform failed: {e}")))?;
        let scale = 1.0 / grid.n as f64;
        for c in out.iter_mut() {
            *c *= scale;
        }
        out[0] = C64::new(0.0, 0.0);
        let nyq = grid.n / 2;
        out[nyq] = C64::new(0.0, 0.0);
        SpectralField::new(grid, out)
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// `v_k` for any signed `k` with `|k| <= N/2`.
    pub fn mode(&self, k: i64) -> C64 {
        let c = self.coeffs[k.unsigned_abs() as usize];
        if k < 0 {
            c.conj()
        } else {
            c
        }
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }
}

pub(crate) fn check_finite(v: &[C64]) -> Result<()> {
    match v.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
        Some(k) => Err(Error::InvalidState(format!("non-finite coefficient at mode {k}"))),
        None => Ok(()),
    }
}

/// Reusable evaluator of the KSE right-hand side on a fixed grid.
///
/// Holds transform plans and scratch space; clone it to get an independent
/// evaluator for another thread (plans are shared).
#[derive(Clone)]
pub struct RhsEvaluator {
    grid: FourierGrid,
    symbol: Vec<f64>,
    padded: usize,
    c2r: Arc<dyn ComplexToReal<f64>>,
    r2c: Arc<dyn RealToComplex<f64>>,
    spec: Vec<C64>,
    phys: Vec<f64>,
    c2r_scratch: Vec<C64>,
    r2c_scratch: Vec<C64>,
}

impl RhsEvaluator {
    pub fn new(grid: &FourierGrid) -> Self {
        Self::with_transform_len(grid, padded_len(grid.n))
    }

    /// Evaluator whose products are formed on `padded` points; `grid.n()`
    /// gives the aliased pseudospectral product.
    pub fn with_transform_len(grid: &FourierGrid, padded: usize) -> Self {
        assert!(padded >= grid.n && padded % 2 == 0, "transform length {padded} below grid size");
        let mut planner = RealFftPlanner::<f64>::new();
        let c2r = planner.plan_fft_inverse(padded);
        let r2c = planner.plan_fft_forward(padded);
        RhsEvaluator {
            grid: grid.clone(),
            symbol: linear_symbol(grid),
            padded,
            spec: c2r.make_input_vec(),
            phys: c2r.make_output_vec(),
            c2r_scratch: c2r.make_scratch_vec(),
            r2c_scratch: r2c.make_scratch_vec(),
            c2r,
            r2c,
        }
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// Writes `-(i q_k / 2) (v*v)_k` into `out`. `v` and `out` hold
    /// `N/2 + 1` coefficients; `out[0]` and `out[N/2]` are zero.
    pub fn nonlinear_into(&mut self, v: &[C64], out: &mut [C64]) {
        let modes = self.grid.modes();
        debug_assert_eq!(v.len(), modes);
        debug_assert_eq!(out.len(), modes);
        let zero = C64::new(0.0, 0.0);
        self.spec[..modes].copy_from_slice(v);
        self.spec[modes - 1] = zero;
        self.spec[0] = zero;
        for c in self.spec[modes..].iter_mut() {
            *c = zero;
        }
        // Both calls only fail on buffer-length or DC/Nyquist imaginary part
        // mismatches, which the construction above rules out.
        self.c2r
            .process_with_scratch(&mut self.spec, &mut self.phys, &mut self.c2r_scratch)
            .expect("inverse transform");
        for x in self.phys.iter_mut() {
            *x *= *x;
        }
        self.r2c
            .process_with_scratch(&mut self.phys, &mut self.spec, &mut self.r2c_scratch)
            .expect("forward transform");
        let norm = 0.5 / self.padded as f64;
        for k in 0..modes {
            let w = self.spec[k] * norm;
            // -(i q/2) w
            let q = self.grid.wavenumbers[k];
            out[k] = C64::new(q * w.im, -q * w.re);
        }
        out[0] = zero;
        out[modes - 1] = zero;
    }

    /// Full right-hand side, linear plus nonlinear part.
    pub fn rhs_into(&mut self, v: &[C64], out: &mut [C64]) {
        self.nonlinear_into(v, out);
        let last = out.len() - 1;
        for k in 1..last {
            out[k] += v[k] * self.symbol[k];
        }
    }
}

/// Right-hand side of the truncated mode equations for `field`.
pub fn kse_rhs(field: &SpectralField) -> Result<SpectralField> {
    check_finite(&field.coeffs)?;
    let mut eval = RhsEvaluator::new(&field.grid);
    let mut out = vec![C64::new(0.0, 0.0); field.grid.modes()];
    eval.rhs_into(&field.coeffs, &mut out);
    Ok(SpectralField { grid: field.grid.clone(), coeffs: out })
}
