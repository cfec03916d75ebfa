use serde::Serialize;

use crate::error::{Error, Result};

/// Histogram density on equal-width bins.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pdf {
    pub lo: f64,
    pub hi: f64,
    pub density: Vec<f64>,
}

impl Pdf {
    pub fn bins(&self) -> usize {
        self.density.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.density.len() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.width();
        (0..self.bins()).map(|i| self.lo + (i as f64 + 0.5) * w).collect()
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.width()
    }
}

/// Density on `[lo, hi)` normalized by the total sample count, so mass
/// outside the range is simply lost.
pub fn pdf_on_range(x: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Pdf> {
    if bins == 0 || !(hi > lo) || x.is_empty() {
        return Err(Error::Argument(format!("bad histogram request: {bins} bins on [{lo}, {hi}), {} samples", x.len())));
    }
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in x {
        if v >= lo && v < hi {
            counts[(((v - lo) / w) as usize).min(bins - 1)] += 1;
        } else if v == hi {
            counts[bins - 1] += 1;
        }
    }
    let norm = 1.0 / (x.len() as f64 * w);
    Ok(Pdf { lo, hi, density: counts.into_iter().map(|c| c as f64 * norm).collect() })
}

/// Histogram density over the data range padded by 5% on each side.
pub fn empirical_pdf(x: &[f64], bins: usize) -> Result<Pdf> {
    if x.len() < 1000 {
        return Err(Error::Argument(format!("need at least 1000 samples for a pdf, got {}", x.len())));
    }
    let (min, max) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(max > min) {
        return Err(Error::DegeneratePdf(format!("all samples equal {min}")));
    }
    let pad = 0.05 * (max - min);
    pdf_on_range(x, bins, min - pad, max + pad)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Bins used to compare distributions: 64 bins on `±4·std(reference)`.
pub const COMPARISON_BINS: usize = 64;

/// `∫ |p - q|` with both densities on the reference's comparison grid.
pub fn pdf_l1_distance(reference: &[f64], other: &[f64]) -> Result<f64> {
    let s = std_dev(reference);
    if !(s > 0.0) {
        return Err(Error::DegeneratePdf("reference series has zero spread".into()));
    }
    let p = pdf_on_range(reference, COMPARISON_BINS, -4.0 * s, 4.0 * s)?;
    let q = pdf_on_range(other, COMPARISON_BINS, -4.0 * s, 4.0 * s)?;
    Ok(p.density.iter().zip(&q.density).map(|(a, b)| (a - b).abs()).sum::<f64>() * p.width())
}

/// `|∫_{x>0} p - ∫_{x<0} p|`: how far the mass is from being split evenly
/// about zero.
pub fn sign_asymmetry(x: &[f64]) -> f64 {
    let pos = x.iter().filter(|&&v| v > 0.0).count() as f64;
    let neg = x.iter().filter(|&&v| v < 0.0).count() as f64;
    (pos - neg).abs() / x.len() as f64
}
