//! Fourth-order exponential time differencing Runge–Kutta (Cox–Matthews
//! scheme, Kassam–Trefethen coefficient evaluation) for `v' = λ v + N(v)`
//! with diagonal `λ`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{RhsEvaluator, SpectralField, C64};

/// Contour points used for the weight functions.
const CONTOUR_POINTS: usize = 32;
/// Below this `|λ dt|` the weights come from their Taylor series.
const SERIES_THRESHOLD: f64 = 1e-4;

/// Dimensionless ETDRK4 weights at `z = λ dt`, each divided by `dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtdWeights {
    /// `(e^{z/2} - 1) / z`
    pub half_step: f64,
    /// `(-4 - z + e^z (4 - 3z + z^2)) / z^3`
    pub f1: f64,
    /// `(2 + z + e^z (z - 2)) / z^3`
    pub f2: f64,
    /// `(-4 - 3z - z^2 + e^z (4 - z)) / z^3`
    pub f3: f64,
}

impl EtdWeights {
    pub fn at(z: f64) -> Self {
        if z.abs() < SERIES_THRESHOLD {
            Self::series(z)
        } else {
            Self::contour(z)
        }
    }

    fn series(z: f64) -> Self {
        // f1 = sum (k+1)^2 z^k/(k+3)!, f2 = sum (k+1) z^k/(k+3)!,
        // f3 = sum (1-k) z^k/(k+3)!, half = sum (z/2)^k / (2 (k+1)!)
        let mut w = EtdWeights { half_step: 0.0, f1: 0.0, f2: 0.0, f3: 0.0 };
        let mut zk = 1.0;
        let mut half_zk = 1.0;
        for k in 0..8 {
            let kf = k as f64;
            let inv_fact3 = 1.0 / factorial(k + 3);
            w.f1 += (kf + 1.0).powi(2) * zk * inv_fact3;
            w.f2 += (kf + 1.0) * zk * inv_fact3;
            w.f3 += (1.0 - kf) * zk * inv_fact3;
            w.half_step += 0.5 * half_zk / factorial(k + 1);
            zk *= z;
            half_zk *= 0.5 * z;
        }
        w
    }

    fn contour(z: f64) -> Self {
        let mut acc = [C64::new(0.0, 0.0); 4];
        for j in 0..CONTOUR_POINTS {
            let theta = PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64;
            let r = C64::new(z, 0.0) + C64::from_polar(1.0, theta);
            let er = r.exp();
            let r2 = r * r;
            let r3 = r2 * r;
            acc[0] += ((r * 0.5).exp() - 1.0) / r;
            acc[1] += (-4.0 - r + er * (4.0 - 3.0 * r + r2)) / r3;
            acc[2] += (2.0 + r + er * (r - 2.0)) / r3;
            acc[3] += (-4.0 - 3.0 * r - r2 + er * (4.0 - r)) / r3;
        }
        let m = CONTOUR_POINTS as f64;
        EtdWeights {
            half_step: acc[0].re / m,
            f1: acc[1].re / m,
            f2: acc[2].re / m,
            f3: acc[3].re / m,
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Per-mode ETDRK4 coefficients for a fixed step size.
#[derive(Clone, Debug, PartialEq)]
pub struct EtdCoefficients {
    dt: f64,
    /// `exp(λ dt)`
    pub e: Vec<f64>,
    /// `exp(λ dt / 2)`
    pub e2: Vec<f64>,
    /// `dt (e^{λdt/2} - 1)/(λ dt)`
    pub q: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
}

impl EtdCoefficients {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }
}

/// Tabulates the coefficients for linear symbols `symbol` and step `dt`.
pub fn precompute(symbol: &[f64], dt: f64) -> Result<EtdCoefficients> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Argument(format!("time step must be positive, got {dt}")));
    }
    if let Some(k) = symbol.iter().position(|s| !s.is_finite()) {
        return Err(Error::Argument(format!("non-finite linear symbol at mode {k}")));
    }
    let n = symbol.len();
    let mut c = EtdCoefficients {
        dt,
        e: Vec::with_capacity(n),
        e2: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        f1: Vec::with_capacity(n),
        f2: Vec::with_capacity(n),
        f3: Vec::with_capacity(n),
    };
    for &lam in symbol {
        let z = lam * dt;
        let w = EtdWeights::at(z);
        c.e.push(z.exp());
        c.e2.push((0.5 * z).exp());
        c.q.push(dt * w.half_step);
        c.f1.push(dt * w.f1);
        c.f2.push(dt * w.f2);
        c.f3.push(dt * w.f3);
    }
    Ok(c)
}

/// Stage buffers for repeated steps.
#[derive(Clone, Debug)]
pub struct StepBuffers {
    nv: Vec<C64>,
    na: Vec<C64>,
    nb: Vec<C64>,
    nc: Vec<C64>,
    a: Vec<C64>,
    b: Vec<C64>,
    c: Vec<C64>,
}

impl StepBuffers {
    pub fn new(modes: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); modes];
        StepBuffers {
            nv: z.clone(),
            na: z.clone(),
            nb: z.clone(),
            nc: z.clone(),
            a: z.clone(),
            b: z.clone(),
            c: z,
        }
    }
}

/// One ETDRK4 step in place with an arbitrary nonlinear operator
/// `nonlinear(v, out)`.
pub fn step_with<F>(v: &mut [C64], coeffs: &EtdCoefficients, buf: &mut StepBuffers, mut nonlinear: F)
where
    F: FnMut(&[C64], &mut [C64]),
{
    let n = v.len();
    debug_assert_eq!(coeffs.len(), n);
    let StepBuffers { nv, na, nb, nc, a, b, c } = buf;

    nonlinear(v, nv);
    for k in 0..n {
        a[k] = v[k] * coeffs.e2[k] + nv[k] * coeffs.q[k];
    }
    nonlinear(a, na);
    for k in 0..n {
        b[k] = v[k] * coeffs.e2[k] + na[k] * coeffs.q[k];
    }
    nonlinear(b, nb);
    for k in 0..n {
        c[k] = a[k] * coeffs.e2[k] + (nb[k] * 2.0 - nv[k]) * coeffs.q[k];
    }
    nonlinear(c, nc);
    for k in 0..n {
        v[k] = v[k] * coeffs.e[k]
            + nv[k] * coeffs.f1[k]
            + (na[k] + nb[k]) * (2.0 * coeffs.f2[k])
            + nc[k] * coeffs.f3[k];
    }
}

/// KSE integrator bundling coefficients, transform plans and stage buffers.
#[derive(Clone)]
pub struct Etdrk4 {
    coeffs: EtdCoefficients,
    rhs: RhsEvaluator,
    buf: StepBuffers,
}

impl Etdrk4 {
    pub fn new(rhs: RhsEvaluator, dt: f64) -> Result<Self> {
        let coeffs = precompute(rhs.symbol(), dt)?;
        let buf = StepBuffers::new(coeffs.len());
        Ok(Etdrk4 { coeffs, rhs, buf })
    }

    pub fn coeffs(&self) -> &EtdCoefficients {
        &self.coeffs
    }

    pub fn dt(&self) -> f64 {
        self.coeffs.dt
    }

    /// Advances the half-spectrum `v` by one step.
    pub fn step(&mut self, v: &mut [C64]) {
        let rhs = &mut self.rhs;
        step_with(v, &self.coeffs, &mut self.buf, |x, out| rhs.nonlinear_into(x, out));
    }
}

/// One KSE step of `state` with precomputed `coeffs`.
pub fn step(state: &SpectralField, coeffs: &EtdCoefficients) -> Result<SpectralField> {
    let grid = state.grid();
    if coeffs.len() != grid.modes() {
        return Err(Error::Argument(format!(
            "coefficients cover {} modes but the state has {}",
            coeffs.len(),
            grid.modes()
        )));
    }
    let mut rhs = RhsEvaluator::new(grid);
    let mut buf = StepBuffers::new(grid.modes());
    let mut v = state.coeffs().to_vec();
    step_with(&mut v, coeffs, &mut buf, |x, out| rhs.nonlinear_into(x, out));
    SpectralField::new(grid, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{linear_symbol, FourierGrid};
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    /// Exact rational partial sums of the weight series; the truncation
    /// error after `terms` terms is far below double precision for the
    /// arguments used here.
    fn series_oracle(num: i64, den: i64, terms: usize) -> [f64; 4] {
        let z = BigRational::new(BigInt::from(num), BigInt::from(den));
        let half = &z / BigRational::from_integer(BigInt::from(2));
        let mut fact = vec![BigRational::one()];
        for i in 1..terms + 4 {
            let prev = fact[i - 1].clone();
            fact.push(prev * BigRational::from_integer(BigInt::from(i)));
        }
        let (mut h, mut f1, mut f2, mut f3) =
            (BigRational::zero(), BigRational::zero(), BigRational::zero(), BigRational::zero());
        let mut zk = BigRational::one();
        let mut hk = BigRational::one();
        for k in 0..terms {
            let kk = BigRational::from_integer(BigInt::from(k as i64));
            let one = BigRational::one();
            let inv = BigRational::one() / &fact[k + 3];
            f1 += (&kk + &one) * (&kk + &one) * &zk * &inv;
            f2 += (&kk + &one) * &zk * &inv;
            f3 += (&one - &kk) * &zk * &inv;
            h += &hk / (&fact[k + 1] * BigRational::from_integer(BigInt::from(2)));
            zk *= &z;
            hk *= &half;
        }
        [h, f1, f2, f3].map(|x| x.to_f64().unwrap())
    }

    #[test]
    fn weights_match_exact_series() {
        let cases: [(i64, i64); 7] =
            [(1, 100_000_000), (1, 10_000), (1, 1), (-1, 1), (-10, 1), (3, 2), (-1, 100_000)];
        for (num, den) in cases {
            let z = num as f64 / den as f64;
            let w = EtdWeights::at(z);
            let exact = series_oracle(num, den, 90);
            for (got, want) in [w.half_step, w.f1, w.f2, w.f3].iter().zip(exact) {
                let rel = (got - want).abs() / want.abs();
                assert!(rel < 1e-10, "z={z}: got {got}, want {want}, rel {rel:e}");
            }
        }
    }

    #[test]
    fn zero_symbol_limits() {
        let c = precompute(&[0.0, -1.0], 0.5).unwrap();
        assert_eq!(c.e[0], 1.0);
        assert_eq!(c.e2[0], 1.0);
        assert!((c.q[0] - 0.25).abs() < 1e-16);
        assert!((c.f1[0] - 0.5 / 6.0).abs() < 1e-16);
        assert!((c.f2[0] - 0.5 / 6.0).abs() < 1e-16);
        assert!((c.f3[0] - 0.5 / 6.0).abs() < 1e-16);
        // weights sum to the forward-Euler weight dt at z = 0:
        // f1 + 2 f2 + 2 f2 + f3 -> dt (1/6 + 4/6 + 1/6)
        assert!((c.f1[0] + 4.0 * c.f2[0] + c.f3[0] - 0.5).abs() < 1e-15);
        assert!((c.e[1] - (-0.5f64).exp()).abs() < 1e-16);
        let c = precompute(&[-1.0], 1.0).unwrap();
        assert!((c.e[0] - 0.367_879_441_171_442_3).abs() < 1e-15);
    }

    #[test]
    fn finite_for_stiff_symbols() {
        let grid = FourierGrid::new(21.55, 96).unwrap();
        let c = precompute(&linear_symbol(&grid), 1e-3).unwrap();
        for v in [&c.e, &c.e2, &c.q, &c.f1, &c.f2, &c.f3] {
            assert!(v.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn rejects_bad_step() {
        assert!(precompute(&[0.0], 0.0).is_err());
        assert!(precompute(&[0.0], -1.0).is_err());
        assert!(precompute(&[f64::NAN], 1.0).is_err());
    }

    #[test]
    fn exact_for_linear_flow() {
        let grid = FourierGrid::new(21.55, 32).unwrap();
        let sym = linear_symbol(&grid);
        let dt = 0.05;
        let c = precompute(&sym, dt).unwrap();
        let mut v: Vec<C64> = (0..grid.modes()).map(|k| C64::new(k as f64 * 0.1, 1.0 / (k as f64 + 1.0))).collect();
        v[0] = C64::new(0.0, 0.0);
        v[16] = C64::new(0.0, 0.0);
        let v0 = v.clone();
        let mut buf = StepBuffers::new(grid.modes());
        step_with(&mut v, &c, &mut buf, |_, out| out.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0)));
        for k in 0..grid.modes() {
            let exact = v0[k] * (sym[k] * dt).exp();
            assert!((v[k] - exact).norm() <= 1e-12 * exact.norm().max(1e-300));
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let grid = FourierGrid::new(21.55, 32).unwrap();
        let c = precompute(&linear_symbol(&grid), 1e-3).unwrap();
        let out = step(&SpectralField::zeros(&grid), &c).unwrap();
        assert!(out.coeffs().iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let grid = FourierGrid::new(21.55, 32).unwrap();
        let other = FourierGrid::new(21.55, 16).unwrap();
        let c = precompute(&linear_symbol(&other), 1e-3).unwrap();
        assert!(matches!(step(&SpectralField::zeros(&grid), &c), Err(Error::Argument(_))));
    }
}
