//! NARMAX reduced stochastic system:
//!
//! ```text
//! u^{n+1} = u^n + δ R^δ(u^n) + δ z^{n+1}
//! z^{n+1} = Φ^{n+1} + ξ^{n+1},   Re ξ_k, Im ξ_k ~ N(0, σ_k²) independent
//! ```
//!
//! with `Φ_k` linear in real coefficients over the regressors of
//! [`crate::features`].

mod fit;
mod lsq;
mod scan;
mod simulate;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data_gen::ObservationSeries;
use crate::error::{Error, Result};
use crate::features::{Layout, Structure};
use crate::reduced::{ModelErrorSeries, ReducedModel};
use crate::spectral::C64;

pub use fit::{fit, fit_armax, fit_ls, fit_mle, neg_log_likelihood, residuals, MleOptions};
pub use lsq::{GivensLs, LsSolution};
pub use scan::{scan_orders, ScanCell, ScanOptions, ScanReport};
pub use simulate::{init_window_len, noise_rng, simulate, simulate_armax, Trajectory, UNSTABLE_AMPLITUDE};

/// Largest order accepted for any of `p`, `r`, `q`.
pub const MAX_ORDER: usize = 8;

/// `(p, r, q)`: autoregressive, exogenous-input and moving-average orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "OrdersSpec", into = "OrdersSpec")]
pub struct Orders {
    pub p: usize,
    pub r: usize,
    pub q: usize,
}

#[derive(Serialize, Deserialize)]
struct OrdersSpec {
    p: usize,
    r: usize,
    q: usize,
}

impl TryFrom<OrdersSpec> for Orders {
    type Error = Error;
    fn try_from(s: OrdersSpec) -> Result<Self> {
        Orders::new(s.p, s.r, s.q)
    }
}

impl From<Orders> for OrdersSpec {
    fn from(o: Orders) -> Self {
        OrdersSpec { p: o.p, r: o.r, q: o.q }
    }
}

impl Orders {
    pub fn new(p: usize, r: usize, q: usize) -> Result<Self> {
        if p.max(r).max(q) > MAX_ORDER {
            return Err(Error::Argument(format!("orders ({p},{r},{q}) exceed the cap of {MAX_ORDER}")));
        }
        Ok(Orders { p, r, q })
    }

    pub fn max_lag(&self) -> usize {
        self.p.max(self.r).max(self.q)
    }

    /// Compact label such as `021`.
    pub fn label(&self) -> String {
        format!("{}{}{}", self.p, self.r, self.q)
    }
}

impl fmt::Display for Orders {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.p, self.r, self.q)
    }
}

impl FromStr for Orders {
    type Err = Error;

    /// Accepts `p,r,q` (optionally parenthesized) or three digits like `021`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = if t.contains(',') {
            t.split(',').map(str::trim).collect()
        } else if t.len() == 3 && t.chars().all(|c| c.is_ascii_digit()) {
            vec![&t[0..1], &t[1..2], &t[2..3]]
        } else {
            return Err(Error::Argument(format!("cannot parse orders from {s:?}; use p,r,q")));
        };
        if parts.len() != 3 {
            return Err(Error::Argument(format!("expected three orders in {s:?}")));
        }
        let v: Vec<usize> = parts
            .iter()
            .map(|x| x.parse().map_err(|_| Error::Argument(format!("bad order {x:?} in {s:?}"))))
            .collect::<Result<_>>()?;
        Orders::new(v[0], v[1], v[2])
    }
}

/// Coefficients of one mode's functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    pub k: usize,
    pub mu: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub sigma2: f64,
}

impl ModeParams {
    /// Coefficients in regressor-row order.
    pub fn theta(&self) -> Vec<f64> {
        let mut t = vec![self.mu];
        t.extend(&self.a);
        t.extend(&self.b);
        t.extend(&self.c);
        t.extend(&self.d);
        t
    }

    pub fn from_theta(k: usize, layout: &Layout, theta: &[f64], sigma2: f64) -> Self {
        let o = layout.orders;
        let (zo, uo, co, xo) = (layout.z_offset(), layout.u_offset(), layout.c_offset(), layout.xi_offset());
        ModeParams {
            k,
            mu: theta[0],
            a: theta[zo..zo + o.p].to_vec(),
            b: theta[uo..uo + o.r].to_vec(),
            c: theta[co..xo].to_vec(),
            d: theta[xo..xo + o.q].to_vec(),
            sigma2,
        }
    }
}

/// Where the parameters came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    pub method: String,
    pub converged: bool,
    pub iterations: usize,
    pub regularized: bool,
    /// Number of fitted targets per mode (`N - q` in the likelihood).
    pub samples: usize,
    pub training_hash: String,
}

/// A fitted (or hand-specified) reduced stochastic model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NarmaxParams {
    pub orders: Orders,
    pub structure: Structure,
    pub k_modes: usize,
    pub delta: f64,
    pub length: f64,
    pub modes: Vec<ModeParams>,
    #[serde(default)]
    pub fit: FitInfo,
}

impl NarmaxParams {
    /// All coefficients and variances zero: the truncated deterministic model.
    pub fn zero(orders: Orders, structure: Structure, k_modes: usize, delta: f64, length: f64) -> Self {
        let layout = Layout::new(orders, structure, k_modes);
        let modes = (1..=k_modes)
            .map(|k| ModeParams::from_theta(k, &layout, &vec![0.0; layout.len()], 0.0))
            .collect();
        NarmaxParams { orders, structure, k_modes, delta, length, modes, fit: FitInfo::default() }
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.orders, self.structure, self.k_modes)
    }

    pub fn sigma2(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.sigma2).collect()
    }

    /// Checks shapes and values. `σ² = 0` is accepted for simulation; the
    /// likelihood rejects it separately.
    pub fn validate(&self) -> Result<()> {
        let layout = self.layout();
        if self.modes.len() != self.k_modes || self.k_modes == 0 {
            return Err(Error::Config(format!("{} mode entries for K = {}", self.modes.len(), self.k_modes)));
        }
        if !(self.delta > 0.0 && self.length > 0.0) {
            return Err(Error::Config("delta and length must be positive".into()));
        }
        for (i, m) in self.modes.iter().enumerate() {
            if m.k != i + 1 {
                return Err(Error::Config(format!("mode entry {i} has k = {}", m.k)));
            }
            let theta = m.theta();
            if theta.len() != layout.len()
                || m.a.len() != self.orders.p
                || m.b.len() != self.orders.r
                || m.d.len() != self.orders.q
            {
                return Err(Error::Config(format!("mode {} has the wrong number of coefficients", m.k)));
            }
            if theta.iter().any(|t| !t.is_finite()) || !m.sigma2.is_finite() || m.sigma2 < 0.0 {
                return Err(Error::Config(format!("mode {} has non-finite or negative values", m.k)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: NarmaxParams = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Observed states with their model errors and `R^δ` values, indexed by
/// time: `u[t]` for `t = 0..=T`, `z[t]` for `t = 1..=T` (slot 0 is zero).
#[derive(Clone, Debug)]
pub struct TrainingData {
    pub k_modes: usize,
    pub delta: f64,
    pub length: f64,
    pub u: Vec<C64>,
    pub rdelta: Vec<C64>,
    pub z: Vec<C64>,
    pub hash: String,
}

impl TrainingData {
    /// Pairs a series with its extracted model error.
    pub fn new(series: &ObservationSeries, z: &ModelErrorSeries) -> Result<Self> {
        if z.k() != series.k() || z.len() != series.steps() || z.delta() != series.delta() {
            return Err(Error::Argument(format!(
                "model error (K = {}, T = {}) does not match the series (K = {}, T = {})",
                z.k(),
                z.len(),
                series.k(),
                series.steps()
            )));
        }
        let mut data = Self::from_states(series.samples(), series.k(), series.delta(), series.meta().length)?;
        data.z[series.k()..].copy_from_slice(z.values());
        data.hash = series.content_hash();
        Ok(data)
    }

    pub fn from_series(series: &ObservationSeries) -> Result<Self> {
        let mut data = Self::from_states(series.samples(), series.k(), series.delta(), series.meta().length)?;
        data.hash = series.content_hash();
        Ok(data)
    }

    /// Builds the data from a flat time-major state sequence.
    pub fn from_states(u: &[C64], k_modes: usize, delta: f64, length: f64) -> Result<Self> {
        Self::from_states_with(&mut ReducedModel::new(length, k_modes)?, u, delta)
    }

    /// As [`TrainingData::from_states`] with a caller-configured truncated model.
    pub fn from_states_with(model: &mut ReducedModel, u: &[C64], delta: f64) -> Result<Self> {
        let (k_modes, length) = (model.k(), model.length());
        if u.len() % k_modes != 0 || u.len() < 2 * k_modes {
            return Err(Error::Argument("need at least two whole states".into()));
        }
        let times = u.len() / k_modes;
        let mut rdelta = vec![C64::new(0.0, 0.0); u.len()];
        let mut z = vec![C64::new(0.0, 0.0); u.len()];
        for t in 0..times {
            let cur = &u[t * k_modes..(t + 1) * k_modes];
            model.rdelta_into(cur, delta, &mut rdelta[t * k_modes..(t + 1) * k_modes]);
            if t + 1 < times {
                for i in 0..k_modes {
                    z[(t + 1) * k_modes + i] = (u[(t + 1) * k_modes + i] - cur[i]) / delta - rdelta[t * k_modes + i];
                }
            }
        }
        Ok(TrainingData { k_modes, delta, length, u: u.to_vec(), rdelta, z, hash: String::new() })
    }

    /// `T`.
    pub fn steps(&self) -> usize {
        self.u.len() / self.k_modes - 1
    }

    /// The first `steps + 1` states.
    pub fn prefix(&self, steps: usize) -> TrainingData {
        let n = (steps + 1).min(self.u.len() / self.k_modes) * self.k_modes;
        TrainingData {
            k_modes: self.k_modes,
            delta: self.delta,
            length: self.length,
            u: self.u[..n].to_vec(),
            rdelta: self.rdelta[..n].to_vec(),
            z: self.z[..n].to_vec(),
            hash: format!("{}[..{}]", self.hash, steps),
        }
    }

    pub fn mode_z(&self, t: usize, k: usize) -> C64 {
        self.z[t * self.k_modes + k - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_parse() {
        assert_eq!("0,2,1".parse::<Orders>().unwrap(), Orders::new(0, 2, 1).unwrap());
        assert_eq!("(2, 1, 0)".parse::<Orders>().unwrap(), Orders::new(2, 1, 0).unwrap());
        assert_eq!("021".parse::<Orders>().unwrap(), Orders::new(0, 2, 1).unwrap());
        assert!("0,2".parse::<Orders>().is_err());
        assert!("0,9,1".parse::<Orders>().is_err());
        assert!("x".parse::<Orders>().is_err());
        assert_eq!(Orders::new(0, 2, 1).unwrap().to_string(), "(0,2,1)");
    }

    #[test]
    fn params_json_round_trip() {
        let orders = Orders::new(0, 2, 1).unwrap();
        let mut p = NarmaxParams::zero(orders, Structure::Narmax, 5, 0.1, 21.55);
        p.modes[2].b = vec![1.25, -1.0 / 3.0];
        p.modes[2].sigma2 = 2.5e-6;
        let back = NarmaxParams::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.modes[0].theta().len(), 10);
    }

    #[test]
    fn malformed_params_rejected() {
        let orders = Orders::new(1, 1, 0).unwrap();
        let mut p = NarmaxParams::zero(orders, Structure::Narmax, 3, 0.1, 10.0);
        p.modes[1].a.push(0.5);
        assert!(p.validate().is_err());
        let mut p = NarmaxParams::zero(orders, Structure::Narmax, 3, 0.1, 10.0);
        p.modes[0].sigma2 = -1.0;
        assert!(p.validate().is_err());
        assert!(NarmaxParams::from_json(r#"{"orders":{"p":9,"r":1,"q":0}}"#).is_err());
    }

    #[test]
    fn training_data_matches_extraction() {
        use crate::reduced::extract_with;
        let k = 3;
        let u: Vec<C64> = (0..30).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let data = TrainingData::from_states(&u, k, 0.1, 12.0).unwrap();
        let mut model = ReducedModel::new(12.0, k).unwrap();
        let z = extract_with(&mut model, &u, 0.1).unwrap();
        assert_eq!(data.steps(), 9);
        for t in 1..=9 {
            for m in 1..=k {
                assert_eq!(data.mode_z(t, m), z.at(t)[m - 1]);
            }
        }
    }
}
