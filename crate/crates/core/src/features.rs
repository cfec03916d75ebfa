//! Extended modes and regressor rows of the NARMAX functional.
//!
//! The quadratic terms come from the first approximate-inertial-manifold
//! iterate `ψ₁`: on the slow manifold a high mode `v_j`, `K < j ≤ 2K`, is
//! slaved to the low ones as roughly `q_j^{-4}` times the `j`-th component
//! of the quadratic term `(i q_j / 2) Σ u_l u_{j-l}`. Constant prefactors
//! are left to the fitted coefficients, which leaves
//!
//! ```text
//! ũ_j = u_j                              1 ≤ j ≤ K
//! ũ_j = i Σ_{l=j-K}^{K} u_l u_{j-l}      K < j ≤ 2K
//! ```
//!
//! and mode `k` of the model error sees the products `ũ_{j+K} ũ_{j+K-k}`,
//! `j = 1..K`, which is how these high modes would enter the `k`-th
//! component of the nonlinear term.
//!
//! A row for mode `k` predicting `z_k^{n+1}` is laid out as
//!
//! ```text
//! 1 | z^n .. z^{n-p+1} | u^n .. u^{n-r+1} | c-block (K) | R^δ_k(u^n) | ξ^n .. ξ^{n-q+1}
//! ```
//!
//! The ARMAX structure drops the c-block and the `R^δ` column.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::narmax::Orders;
use crate::spectral::C64;

/// Which terms enter the functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Narmax,
    Armax,
}

/// `ũ_1..ũ_{2K}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedModes {
    values: Vec<C64>,
}

impl ExtendedModes {
    pub fn k(&self) -> usize {
        self.values.len() / 2
    }

    /// `ũ_j` for `1 ≤ |j| ≤ 2K`, with `ũ_{-j} = conj(ũ_j)`.
    pub fn get(&self, j: i64) -> C64 {
        assert!(j != 0 && j.unsigned_abs() as usize <= self.values.len(), "index {j} out of range");
        let v = self.values[j.unsigned_abs() as usize - 1];
        if j < 0 {
            v.conj()
        } else {
            v
        }
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }
}

pub fn extend_modes(u: &[C64]) -> ExtendedModes {
    let mut values = vec![C64::new(0.0, 0.0); 2 * u.len()];
    extend_modes_into(u, &mut values);
    ExtendedModes { values }
}

/// Writes `ũ_1..ũ_{2K}` into `out` (length `2K`).
pub fn extend_modes_into(u: &[C64], out: &mut [C64]) {
    let k = u.len();
    out[..k].copy_from_slice(u);
    for j in k + 1..=2 * k {
        let mut s = C64::new(0.0, 0.0);
        for l in j - k..=k {
            s += u[l - 1] * u[j - l - 1];
        }
        out[j - 1] = C64::new(-s.im, s.re);
    }
}

/// `ũ_{j+K} ũ_{j+K-k}` for `j = 1..K`, given `ext = ũ_1..ũ_{2K}`.
pub fn c_block_into(ext: &[C64], mode: usize, out: &mut [C64]) {
    let k = ext.len() / 2;
    for j in 1..=k {
        out[j - 1] = ext[j + k - 1] * ext[j + k - mode - 1];
    }
}

/// Column layout of a regressor row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub orders: Orders,
    pub structure: Structure,
    pub k_modes: usize,
}

impl Layout {
    pub fn new(orders: Orders, structure: Structure, k_modes: usize) -> Self {
        Layout { orders, structure, k_modes }
    }

    fn c_len(&self) -> usize {
        match self.structure {
            Structure::Narmax => self.k_modes + 1,
            Structure::Armax => 0,
        }
    }

    pub fn len(&self) -> usize {
        1 + self.orders.p + self.orders.r + self.c_len() + self.orders.q
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn z_offset(&self) -> usize {
        1
    }

    pub fn u_offset(&self) -> usize {
        1 + self.orders.p
    }

    pub fn c_offset(&self) -> usize {
        1 + self.orders.p + self.orders.r
    }

    pub fn xi_offset(&self) -> usize {
        self.c_offset() + self.c_len()
    }

    /// First time index `t` for which a row predicting `z^t` can be built
    /// from a history starting at `u^0` and `z^1`.
    pub fn first_target(&self) -> usize {
        let o = self.orders;
        (o.p + 1).max(o.r).max(o.q + 1)
    }

    /// Coefficient names in row order.
    pub fn names(&self) -> Vec<String> {
        let o = self.orders;
        let mut names = vec!["mu".to_string()];
        names.extend((1..=o.p).map(|j| format!("a{j}")));
        names.extend((0..o.r).map(|j| format!("b{j}")));
        names.extend((1..=self.c_len()).map(|j| format!("c{j}")));
        names.extend((1..=o.q).map(|j| format!("d{j}")));
        names
    }
}

/// Time-indexed history. `u[t]`, `rdelta[t] = R^δ(u^t)`, `z[t]` and `xi[t]`
/// are flat time-major `K`-vectors; slot 0 of `z` and `xi` is unused.
#[derive(Clone, Copy, Debug)]
pub struct History<'a> {
    pub k_modes: usize,
    pub u: &'a [C64],
    pub rdelta: &'a [C64],
    pub z: &'a [C64],
    pub xi: &'a [C64],
}

impl History<'_> {
    fn times(&self, series: &[C64]) -> usize {
        series.len() / self.k_modes
    }

    fn at(&self, series: &[C64], t: usize, mode: usize) -> C64 {
        series[t * self.k_modes + mode - 1]
    }
}

fn need(name: &str, lag: usize, n: usize, min_t: usize, available: usize) -> Result<usize> {
    match n.checked_sub(lag) {
        Some(t) if t >= min_t && t < available => Ok(t),
        _ => Err(Error::Argument(format!(
            "history too short: {name}^(n-{lag}) with n = {n} is not available ({available} stored)"
        ))),
    }
}

/// Row for mode `mode` (1-based) predicting `z^{n+1}` from time `n`.
pub fn build_regressors(h: &History, layout: &Layout, mode: usize, n: usize) -> Result<Vec<C64>> {
    if mode == 0 || mode > h.k_modes {
        return Err(Error::Argument(format!("mode {mode} outside 1..={}", h.k_modes)));
    }
    let mut row = vec![C64::new(0.0, 0.0); layout.len()];
    let mut ext = vec![C64::new(0.0, 0.0); 2 * h.k_modes];
    fill_row(h, layout, mode, n, &mut ext, &mut row)?;
    Ok(row)
}

/// As [`build_regressors`] with caller-provided scratch (`ext` of length `2K`).
pub fn fill_row(h: &History, layout: &Layout, mode: usize, n: usize, ext: &mut [C64], row: &mut [C64]) -> Result<()> {
    let o = layout.orders;
    let k = h.k_modes;
    row[0] = C64::new(1.0, 0.0);
    for j in 0..o.p {
        let t = need("z", j, n, 1, h.times(h.z))?;
        row[layout.z_offset() + j] = h.at(h.z, t, mode);
    }
    for j in 0..o.r {
        let t = need("u", j, n, 0, h.times(h.u))?;
        row[layout.u_offset() + j] = h.at(h.u, t, mode);
    }
    if layout.structure == Structure::Narmax {
        need("u", 0, n, 0, h.times(h.u))?;
        need("R", 0, n, 0, h.times(h.rdelta))?;
        extend_modes_into(&h.u[n * k..(n + 1) * k], ext);
        let c = layout.c_offset();
        c_block_into(ext, mode, &mut row[c..c + k]);
        row[c + k] = h.at(h.rdelta, n, mode);
    }
    for j in 0..o.q {
        let t = need("xi", j, n, 1, h.times(h.xi))?;
        row[layout.xi_offset() + j] = h.at(h.xi, t, mode);
    }
    Ok(())
}

/// `θ · row` with real `θ`.
pub fn evaluate(theta: &[f64], row: &[C64]) -> C64 {
    theta.iter().zip(row).map(|(t, r)| r * t).sum()
}
