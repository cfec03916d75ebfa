use serde::Serialize;

use crate::error::{Error, Result};

/// Non-centered autocorrelation `γ(h)`, `h = 1..=H`, of one mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcfCurve {
    pub mode: usize,
    pub values: Vec<f64>,
}

/// `γ(h) = 1/(T-h) Σ_{n<T-h} x[n+h] x[n]` for `h = 1..=h_max`, where
/// `T = x.len()`.
pub fn acf(x: &[f64], h_max: usize) -> Result<Vec<f64>> {
    if h_max == 0 || x.len() <= h_max {
        return Err(Error::Argument(format!("piece of length {} is too short for {h_max} lags", x.len())));
    }
    let t = x.len();
    Ok((1..=h_max)
        .map(|h| x[h..].iter().zip(&x[..t - h]).map(|(a, b)| a * b).sum::<f64>() / (t - h) as f64)
        .collect())
}

/// Same as [`acf`] with lag 0 included, for normalized plots.
pub fn acf_with_zero(x: &[f64], h_max: usize) -> Result<Vec<f64>> {
    let mut out = vec![x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64];
    out.extend(acf(x, h_max)?);
    Ok(out)
}

/// A set of real-part pieces: `pieces[i][k]` is mode `k+1` of piece `i`.
pub type Pieces = Vec<Vec<Vec<f64>>>;

/// `D_k = mean_i ( (1/H) Σ_{h=1}^{H} |γ_v(h,i) - γ_u(h,i)|² )`.
pub fn acf_distance(data: &Pieces, model: &Pieces, h_max: usize) -> Result<Vec<f64>> {
    if data.len() != model.len() || data.is_empty() {
        return Err(Error::Argument(format!("{} data pieces vs {} model pieces", data.len(), model.len())));
    }
    let k = data[0].len();
    let mut d = vec![0.0; k];
    for (dp, mp) in data.iter().zip(model) {
        if dp.len() != k || mp.len() != k {
            return Err(Error::Argument("pieces disagree on the number of modes".into()));
        }
        for m in 0..k {
            let gv = acf(&dp[m], h_max)?;
            let gu = acf(&mp[m], h_max)?;
            d[m] += gv.iter().zip(&gu).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / h_max as f64;
        }
    }
    Ok(d.into_iter().map(|x| x / data.len() as f64).collect())
}

/// Mean of the per-piece ACFs for each mode.
pub fn mean_acf(pieces: &Pieces, h_max: usize) -> Result<Vec<AcfCurve>> {
    let k = pieces.first().map_or(0, |p| p.len());
    let mut out: Vec<AcfCurve> = (1..=k).map(|mode| AcfCurve { mode, values: vec![0.0; h_max] }).collect();
    for piece in pieces {
        for (m, x) in piece.iter().enumerate() {
            for (acc, g) in out[m].values.iter_mut().zip(acf(x, h_max)?) {
                *acc += g / pieces.len() as f64;
            }
        }
    }
    Ok(out)
}
