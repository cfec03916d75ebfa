use rayon::prelude::*;

use super::lsq::GivensLs;
use super::{FitInfo, ModeParams, NarmaxParams, Orders, TrainingData};
use crate::error::{Error, Result};
use crate::features::{evaluate, fill_row, History, Layout, Structure};
use crate::spectral::C64;

/// Controls for the moving-average fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Gauss-Newton iterations on the exact conditional likelihood after
    /// the iterative least squares has settled.
    pub refine_iterations: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { max_iterations: 200, tolerance: 1e-8, refine_iterations: 50 }
    }
}

/// Fits `orders` with least squares when `q = 0`, otherwise by maximum
/// likelihood.
pub fn fit(data: &TrainingData, orders: Orders, structure: Structure) -> Result<NarmaxParams> {
    if orders.q == 0 {
        fit_ls(data, orders, structure)
    } else {
        fit_mle(data, orders, structure, MleOptions::default())
    }
}

/// The linear ablation: same machinery without the quadratic and `R^δ` terms.
pub fn fit_armax(data: &TrainingData, orders: Orders) -> Result<NarmaxParams> {
    fit(data, orders, Structure::Armax)
}

/// Per-mode row source: the lag-free columns come from the data, the `ξ`
/// lags from a per-mode sequence.
struct RowSource<'a> {
    data: &'a TrainingData,
    base: Layout,
    q: usize,
    mode: usize,
    ext: Vec<C64>,
}

impl<'a> RowSource<'a> {
    fn new(data: &'a TrainingData, layout: &Layout, mode: usize) -> Self {
        let o = layout.orders;
        RowSource {
            data,
            base: Layout::new(Orders { p: o.p, r: o.r, q: 0 }, layout.structure, layout.k_modes),
            q: o.q,
            mode,
            ext: vec![C64::new(0.0, 0.0); 2 * layout.k_modes],
        }
    }

    /// Row at time `n` (predicting `z^{n+1}`), with `xi[t]` the mode's noise.
    fn fill(&mut self, n: usize, xi: &[C64], row: &mut [C64]) {
        let d = self.data;
        let h = History { k_modes: d.k_modes, u: &d.u, rdelta: &d.rdelta, z: &d.z, xi: &[] };
        let b = self.base.len();
        fill_row(&h, &self.base, self.mode, n, &mut self.ext, &mut row[..b]).expect("row within history");
        for j in 0..self.q {
            row[b + j] = xi[n - j];
        }
    }
}

fn check_size(data: &TrainingData, layout: &Layout) -> Result<usize> {
    let t0 = layout.first_target();
    let steps = data.steps();
    let n = (steps + 1).saturating_sub(t0);
    if 2 * n < layout.len() {
        return Err(Error::Argument(format!(
            "{} targets cannot determine {} coefficients for orders {}",
            n,
            layout.len(),
            layout.orders
        )));
    }
    Ok(n)
}

fn split(row: &[C64], re: &mut [f64], im: &mut [f64]) {
    for ((c, r), i) in row.iter().zip(re.iter_mut()).zip(im.iter_mut()) {
        *r = c.re;
        *i = c.im;
    }
}

/// Least squares over targets `t0..=T` with the given `ξ` sequence.
fn solve_mode(src: &mut RowSource, layout: &Layout, xi: &[C64]) -> (Vec<f64>, bool) {
    let cols = layout.len();
    let mut ls = GivensLs::new(cols);
    let mut row = vec![C64::new(0.0, 0.0); cols];
    let (mut re, mut im) = (vec![0.0; cols], vec![0.0; cols]);
    for t in layout.first_target()..=src.data.steps() {
        src.fill(t - 1, xi, &mut row);
        split(&row, &mut re, &mut im);
        let z = src.data.mode_z(t, src.mode);
        ls.add_row(&mut re, z.re);
        ls.add_row(&mut im, z.im);
    }
    let sol = ls.solve();
    (sol.theta, sol.regularized)
}

/// Recursive residuals `ξ^t = z^t - Φ^t(θ)`, zero before the first target.
/// Returns the sequence and `S = Σ |ξ^t|²`.
fn recurse(src: &mut RowSource, layout: &Layout, theta: &[f64]) -> (Vec<C64>, f64) {
    let steps = src.data.steps();
    let mut xi = vec![C64::new(0.0, 0.0); steps + 1];
    let mut row = vec![C64::new(0.0, 0.0); layout.len()];
    let mut s = 0.0;
    for t in layout.first_target()..=steps {
        src.fill(t - 1, &xi, &mut row);
        let e = src.data.mode_z(t, src.mode) - evaluate(theta, &row);
        xi[t] = e;
        s += e.norm_sqr();
        if !s.is_finite() {
            return (xi, f64::INFINITY);
        }
    }
    (xi, s)
}

/// Gauss-Newton on `S(θ)` with derivatives through the `ξ` recursion.
fn refine(src: &mut RowSource, layout: &Layout, theta: &mut Vec<f64>, s: &mut f64, iters: usize) -> (usize, bool) {
    let cols = layout.len();
    let q = layout.orders.q;
    let d0 = layout.xi_offset();
    let steps = src.data.steps();
    let t0 = layout.first_target();
    for it in 0..iters {
        let mut ls = GivensLs::new(cols);
        let mut xi = vec![C64::new(0.0, 0.0); steps + 1];
        // de[t] = ∂ξ^t/∂θ for the last q times, ring-indexed by t mod (q+1).
        let mut de = vec![vec![C64::new(0.0, 0.0); cols]; q + 1];
        let mut row = vec![C64::new(0.0, 0.0); cols];
        let (mut re, mut im) = (vec![0.0; cols], vec![0.0; cols]);
        for t in t0..=steps {
            src.fill(t - 1, &xi, &mut row);
            let e = src.data.mode_z(t, src.mode) - evaluate(theta, &row);
            xi[t] = e;
            let mut g = vec![C64::new(0.0, 0.0); cols];
            for i in 0..cols {
                let mut v = -row[i];
                for j in 1..=q {
                    if t - j >= t0 {
                        v -= de[(t - j) % (q + 1)][i] * theta[d0 + j - 1];
                    }
                }
                g[i] = v;
            }
            // Solve J·step ≈ -e, i.e. rows J with targets -e.
            split(&g, &mut re, &mut im);
            ls.add_row(&mut re, -e.re);
            ls.add_row(&mut im, -e.im);
            de[t % (q + 1)] = g;
        }
        let step = ls.solve().theta;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = theta.iter().zip(&step).map(|(a, b)| a + scale * b).collect();
            let (_, st) = recurse(src, layout, &trial);
            if st < *s {
                let rel = (*s - st) / *s;
                *theta = trial;
                *s = st;
                accepted = true;
                if rel < 1e-12 {
                    return (it + 1, true);
                }
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            // No descent along the Gauss-Newton direction: at a minimum to
            // working precision.
            return (it + 1, true);
        }
    }
    (iters, false)
}

fn assemble(
    data: &TrainingData,
    layout: &Layout,
    method: &str,
    per_mode: Vec<(Vec<f64>, f64, bool, usize, bool)>,
    samples: usize,
) -> NarmaxParams {
    let mut info = FitInfo {
        method: method.to_string(),
        converged: true,
        iterations: 0,
        regularized: false,
        samples,
        training_hash: data.hash.clone(),
    };
    let modes = per_mode
        .into_iter()
        .enumerate()
        .map(|(i, (theta, s, reg, iters, conv))| {
            info.regularized |= reg;
            info.converged &= conv;
            info.iterations = info.iterations.max(iters);
            ModeParams::from_theta(i + 1, layout, &theta, s / (2.0 * samples as f64))
        })
        .collect();
    NarmaxParams {
        orders: layout.orders,
        structure: layout.structure,
        k_modes: data.k_modes,
        delta: data.delta,
        length: data.length,
        modes,
        fit: info,
    }
}

/// Least-squares fit for `q = 0`, where the likelihood maximizer is exactly
/// the least-squares solution. `σ² = S/(2N)` with `N` fitted targets.
pub fn fit_ls(data: &TrainingData, orders: Orders, structure: Structure) -> Result<NarmaxParams> {
    if orders.q != 0 {
        return Err(Error::Argument(format!("least squares needs q = 0, got orders {orders}")));
    }
    let layout = Layout::new(orders, structure, data.k_modes);
    let samples = check_size(data, &layout)?;
    let per_mode = (1..=data.k_modes)
        .into_par_iter()
        .map(|mode| {
            let mut src = RowSource::new(data, &layout, mode);
            let (theta, reg) = solve_mode(&mut src, &layout, &[]);
            let (_, s) = recurse(&mut src, &layout, &theta);
            (theta, s, reg, 1, true)
        })
        .collect();
    Ok(assemble(data, &layout, "ls", per_mode, samples))
}

/// Conditional maximum likelihood for `q ≥ 1` with `ξ^t = 0` before the
/// first target.
///
/// Starts from the `q = 0` fit, uses its residuals as a proxy for the lagged
/// noise, and alternates least squares with recomputing `ξ` until the
/// coefficients stop moving. The fixed point of that iteration treats `ξ`
/// as data, so a Gauss-Newton pass then minimizes the exact recursive
/// `S(θ)`.
pub fn fit_mle(data: &TrainingData, orders: Orders, structure: Structure, opts: MleOptions) -> Result<NarmaxParams> {
    if orders.q == 0 {
        return Err(Error::Argument("maximum likelihood path needs q >= 1; use fit_ls".into()));
    }
    let layout = Layout::new(orders, structure, data.k_modes);
    let samples = check_size(data, &layout)?;
    let base = Layout::new(Orders { q: 0, ..orders }, structure, data.k_modes);
    let per_mode = (1..=data.k_modes)
        .into_par_iter()
        .map(|mode| {
            let mut src0 = RowSource::new(data, &base, mode);
            let (theta0, mut reg) = solve_mode(&mut src0, &base, &[]);
            let (mut xi, _) = recurse(&mut src0, &base, &theta0);
            let t0 = layout.first_target();
            xi[..t0].iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));

            let mut src = RowSource::new(data, &layout, mode);
            let mut theta: Vec<f64> = theta0.clone();
            theta.extend(std::iter::repeat(0.0).take(orders.q));
            let mut s = recurse(&mut src, &layout, &theta).1;
            let mut iterations = 0;
            for _ in 0..opts.max_iterations {
                iterations += 1;
                let (next, r) = solve_mode(&mut src, &layout, &xi);
                let (next_xi, next_s) = recurse(&mut src, &layout, &next);
                if !next_s.is_finite() {
                    break;
                }
                let change = theta.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                reg |= r;
                theta = next;
                xi = next_xi;
                s = next_s;
                if change < opts.tolerance {
                    break;
                }
            }
            let (gn, converged) = refine(&mut src, &layout, &mut theta, &mut s, opts.refine_iterations);
            (theta, s, reg, iterations + gn, converged)
        })
        .collect();
    Ok(assemble(data, &layout, "mle", per_mode, samples))
}

/// Recursive noise estimates `ξ^t` for every mode, flat and time-indexed
/// like the training data (zero before the first target).
pub fn residuals(params: &NarmaxParams, data: &TrainingData) -> Result<Vec<C64>> {
    check_compatible(params, data)?;
    let layout = params.layout();
    let k = data.k_modes;
    let mut out = vec![C64::new(0.0, 0.0); data.u.len()];
    for m in &params.modes {
        let mut src = RowSource::new(data, &layout, m.k);
        let (xi, _) = recurse(&mut src, &layout, &m.theta());
        for (t, x) in xi.into_iter().enumerate() {
            out[t * k + m.k - 1] = x;
        }
    }
    Ok(out)
}

fn check_compatible(params: &NarmaxParams, data: &TrainingData) -> Result<()> {
    params.validate()?;
    if params.k_modes != data.k_modes {
        return Err(Error::Argument(format!("model has K = {}, data has K = {}", params.k_modes, data.k_modes)));
    }
    check_size(data, &params.layout())?;
    Ok(())
}

/// Negative conditional log-likelihood (up to a constant):
/// `Σ_k ( S_k/(2σ_k²) + N ln σ_k² )` with `N` fitted targets.
pub fn neg_log_likelihood(params: &NarmaxParams, data: &TrainingData) -> Result<f64> {
    check_compatible(params, data)?;
    if let Some(m) = params.modes.iter().find(|m| !(m.sigma2 > 0.0)) {
        return Err(Error::Domain(format!("sigma^2 of mode {} must be positive, got {}", m.k, m.sigma2)));
    }
    let layout = params.layout();
    let n = check_size(data, &layout)? as f64;
    Ok(params
        .modes
        .iter()
        .map(|m| {
            let mut src = RowSource::new(data, &layout, m.k);
            let (_, s) = recurse(&mut src, &layout, &m.theta());
            s / (2.0 * m.sigma2) + n * m.sigma2.ln()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// A short trajectory of a weakly forced 3-mode system as exogenous input.
    fn states(times: usize) -> Vec<C64> {
        (0..times)
            .flat_map(|t| {
                let s = t as f64 * 0.1;
                [c(0.6 * s.sin(), 0.3 * (1.3 * s).cos()), c(0.2 * (0.7 * s).cos(), 0.25 * (2.1 * s).sin()), c(0.1 * (3.0 * s).sin(), 0.05)]
            })
            .collect()
    }

    /// Replaces the model error of `data` with a NARMAX process driven by
    /// the data's own regressors, so the coefficients are known exactly.
    fn synthetic(data: &mut TrainingData, params: &NarmaxParams, noise: &[C64]) {
        let layout = params.layout();
        let k = data.k_modes;
        let t0 = layout.first_target();
        let mut z = vec![c(0.0, 0.0); data.u.len()];
        let mut xi = vec![c(0.0, 0.0); data.u.len()];
        let mut ext = vec![c(0.0, 0.0); 2 * k];
        let mut row = vec![c(0.0, 0.0); layout.len()];
        for t in 1..=data.steps() {
            for m in &params.modes {
                let i = t * k + m.k - 1;
                if t < t0 {
                    z[i] = noise[i];
                    continue;
                }
                let h = History { k_modes: k, u: &data.u, rdelta: &data.rdelta, z: &z, xi: &xi };
                fill_row(&h, &layout, m.k, t - 1, &mut ext, &mut row).unwrap();
                z[i] = evaluate(&m.theta(), &row) + noise[i];
                xi[i] = noise[i];
            }
        }
        data.z = z;
    }

    fn truth(orders: Orders, structure: Structure, k: usize) -> NarmaxParams {
        let mut p = NarmaxParams::zero(orders, structure, k, 0.1, 2.0 * PI);
        for m in &mut p.modes {
            let f = m.k as f64;
            m.mu = 0.01 * f;
            m.a.iter_mut().enumerate().for_each(|(j, a)| *a = 0.3 / (j as f64 + 1.0) - 0.05 * f);
            m.b.iter_mut().enumerate().for_each(|(j, b)| *b = if j == 0 { 0.8 } else { -0.5 } / f);
            m.c.iter_mut().enumerate().for_each(|(j, c)| *c = 0.1 * (j as f64 - 1.5));
            m.d.iter_mut().enumerate().for_each(|(j, d)| *d = 0.6 / (j as f64 + 1.0));
        }
        p
    }

    fn gaussian(len: usize, sigma: f64, seed: u64) -> Vec<C64> {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..len)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                c(a * sigma, b * sigma)
            })
            .collect()
    }

    #[test]
    fn noiseless_ls_recovers_coefficients() {
        let orders = Orders::new(2, 2, 0).unwrap();
        let want = truth(orders, Structure::Narmax, 3);
        let mut data = TrainingData::from_states(&states(400), 3, 0.1, 2.0 * PI).unwrap();
        let zeros = vec![c(0.0, 0.0); data.u.len()];
        synthetic(&mut data, &want, &zeros);
        let got = fit_ls(&data, orders, Structure::Narmax).unwrap();
        for (g, w) in got.modes.iter().zip(&want.modes) {
            for (a, b) in g.theta().iter().zip(w.theta()) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
            assert!(g.sigma2 < 1e-20);
        }
    }

    #[test]
    fn sigma2_is_half_mean_square_residual() {
        let orders = Orders::new(1, 1, 0).unwrap();
        let mut data = TrainingData::from_states(&states(200), 3, 0.1, 2.0 * PI).unwrap();
        let noise = gaussian(data.u.len(), 0.01, 3);
        synthetic(&mut data, &truth(orders, Structure::Armax, 3), &noise);
        let got = fit_ls(&data, orders, Structure::Armax).unwrap();
        let xi = residuals(&got, &data).unwrap();
        let t0 = got.layout().first_target();
        for m in &got.modes {
            let s: f64 = (t0..=data.steps()).map(|t| xi[t * 3 + m.k - 1].norm_sqr()).sum();
            let n = (data.steps() + 1 - t0) as f64;
            assert!((m.sigma2 - s / (2.0 * n)).abs() <= 1e-15 * m.sigma2.max(1e-300));
        }
    }

    #[test]
    fn ls_is_the_minimizer() {
        // Perturbing any coefficient can only raise the likelihood.
        let orders = Orders::new(1, 2, 0).unwrap();
        let mut data = TrainingData::from_states(&states(300), 3, 0.1, 2.0 * PI).unwrap();
        synthetic(&mut data, &truth(orders, Structure::Narmax, 3), &gaussian(900, 0.05, 9));
        let fitted = fit_ls(&data, orders, Structure::Narmax).unwrap();
        let base = neg_log_likelihood(&fitted, &data).unwrap();
        for i in 0..fitted.layout().len() {
            for eps in [1e-4, -1e-4] {
                let mut p = fitted.clone();
                let mut th = p.modes[1].theta();
                th[i] += eps;
                p.modes[1] = ModeParams::from_theta(2, &p.layout(), &th, p.modes[1].sigma2);
                assert!(neg_log_likelihood(&p, &data).unwrap() > base);
            }
        }
    }

    #[test]
    fn likelihood_trivial_cases() {
        let orders = Orders::new(0, 1, 0).unwrap();
        let mut data = TrainingData::from_states(&states(50), 3, 0.1, 2.0 * PI).unwrap();
        let mut p = truth(orders, Structure::Narmax, 3);
        let zeros = vec![c(0.0, 0.0); data.u.len()];
        synthetic(&mut data, &p, &zeros);
        p.modes.iter_mut().for_each(|m| m.sigma2 = 1.0);
        assert!(neg_log_likelihood(&p, &data).unwrap().abs() < 1e-20);

        // Doubling residuals quadruples the quadratic part.
        let noise = gaussian(data.u.len(), 0.1, 5);
        let mut d1 = data.clone();
        synthetic(&mut d1, &p, &noise);
        let mut d2 = data.clone();
        synthetic(&mut d2, &p, &noise.iter().map(|x| x * 2.0).collect::<Vec<_>>());
        let (l1, l2) = (neg_log_likelihood(&p, &d1).unwrap(), neg_log_likelihood(&p, &d2).unwrap());
        assert!((l2 - 4.0 * l1).abs() < 1e-12 * l2);

        p.modes[0].sigma2 = 0.0;
        assert!(matches!(neg_log_likelihood(&p, &data), Err(Error::Domain(_))));
    }

    #[test]
    fn likelihood_matches_unrolled_formula() {
        // Orders (1,1,1), one mode: ξ^t written out as the explicit
        // alternating sum Σ_{s≤t} (-d)^{t-s} (z^s - μ - a z^{s-1} - b u^{s-1} - c·terms).
        let orders = Orders::new(1, 1, 1).unwrap();
        let k = 2;
        let u: Vec<C64> = (0..101 * k).map(|i| c((i as f64 * 0.13).sin(), (i as f64 * 0.07).cos() * 0.5)).collect();
        let data = TrainingData::from_states(&u, k, 0.1, 2.0 * PI).unwrap();
        let mut p = truth(orders, Structure::Narmax, k);
        p.modes.iter_mut().for_each(|m| m.sigma2 = 0.37);
        let got = neg_log_likelihood(&p, &data).unwrap();

        let mut want = 0.0;
        for m in &p.modes {
            let km = m.k;
            let at = |s: &[C64], t: usize, mode: usize| s[t * k + mode - 1];
            let ext = |t: usize| {
                let uu = [at(&data.u, t, 1), at(&data.u, t, 2)];
                // ũ_3 = i u1 u2 + i u2 u1, ũ_4 = i u2 u2
                [uu[0], uu[1], c(0.0, 2.0) * uu[0] * uu[1], c(0.0, 1.0) * uu[1] * uu[1]]
            };
            let innov = |s: usize| {
                let e = ext(s - 1);
                let mut phi = c(m.mu, 0.0) + at(&data.z, s - 1, km) * m.a[0] + at(&data.u, s - 1, km) * m.b[0];
                for j in 1..=k {
                    phi += e[j + k - 1] * e[j + k - km - 1] * m.c[j - 1];
                }
                phi += at(&data.rdelta, s - 1, km) * m.c[k];
                at(&data.z, s, km) - phi
            };
            let t0 = 2;
            let mut s_k = 0.0;
            for t in t0..=100 {
                let xi: C64 = (t0..=t).map(|s| innov(s) * (-m.d[0]).powi((t - s) as i32)).sum();
                s_k += xi.norm_sqr();
            }
            want += s_k / (2.0 * 0.37) + 99.0 * 0.37f64.ln();
        }
        assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "{got} vs {want}");
    }

    fn noisy_states(k: usize, times: usize, seed: u64) -> Vec<C64> {
        let kick = gaussian(k * times, 0.3, seed);
        let mut u = vec![c(0.0, 0.0); k * times];
        for t in 1..times {
            for i in 0..k {
                u[t * k + i] = u[(t - 1) * k + i] * 0.9 + kick[t * k + i];
            }
        }
        u
    }

    // With noiseless data the residuals are round-off, so `d` itself is not
    // identified; the shared coefficients must still agree.
    #[test]
    fn mle_with_zero_moving_average_matches_ls() {
        let k = 3;
        let mut data = TrainingData::from_states(&noisy_states(k, 500, 2), k, 0.1, 2.0 * PI).unwrap();
        let ls_orders = Orders::new(1, 2, 0).unwrap();
        let zeros = vec![c(0.0, 0.0); data.u.len()];
        synthetic(&mut data, &truth(ls_orders, Structure::Narmax, k), &zeros);
        let ls = fit_ls(&data, ls_orders, Structure::Narmax).unwrap();
        let mle = fit_mle(&data, Orders::new(1, 2, 1).unwrap(), Structure::Narmax, MleOptions::default()).unwrap();
        for (a, b) in ls.modes.iter().zip(&mle.modes) {
            let tb = b.theta();
            for (x, y) in a.theta().iter().zip(&tb) {
                assert!((x - y).abs() < 1e-6, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn mle_recovers_moving_average() {
        let k = 2;
        let orders = Orders::new(0, 2, 1).unwrap();
        let mut data = TrainingData::from_states(&noisy_states(k, 20_001, 4), k, 0.1, 2.0 * PI).unwrap();
        let truth = truth(orders, Structure::Narmax, k);
        let noise = gaussian(data.u.len(), 0.01, 23);
        synthetic(&mut data, &truth, &noise);
        let got = fit_mle(&data, orders, Structure::Narmax, MleOptions::default()).unwrap();
        assert!(got.fit.converged);
        for (g, w) in got.modes.iter().zip(&truth.modes) {
            assert!((g.d[0] - w.d[0]).abs() < 0.05, "d {} vs {}", g.d[0], w.d[0]);
            assert!((g.sigma2 / 1e-4 - 1.0).abs() < 0.1, "sigma2 {}", g.sigma2);
        }
    }

    #[test]
    fn too_little_data_is_an_error() {
        let data = TrainingData::from_states(&states(4), 3, 0.1, 2.0 * PI).unwrap();
        assert!(fit_ls(&data, Orders::new(2, 2, 0).unwrap(), Structure::Narmax).is_err());
        assert!(fit_ls(&data, Orders::new(0, 2, 1).unwrap(), Structure::Narmax).is_err());
    }
}
