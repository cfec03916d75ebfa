use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{NarmaxParams, Orders};
use crate::error::{Error, Result};
use crate::features::{evaluate, fill_row, History, Structure};
use crate::reduced::ReducedModel;
use crate::spectral::C64;

/// A trajectory is declared unstable once any `|u_k|` exceeds this.
pub const UNSTABLE_AMPLITUDE: f64 = 1e4;

/// Observed states needed to start the reduced system: `2 max{p,r,q} + 1`.
pub fn init_window_len(orders: Orders) -> usize {
    2 * orders.max_lag() + 1
}

/// Generated states following an initialization window.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub k_modes: usize,
    pub delta: f64,
    /// Flat time-major; entry `i` is the state `i + 1` steps after the
    /// window's last state.
    pub states: Vec<C64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len() / self.k_modes
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &[C64] {
        &self.states[i * self.k_modes..(i + 1) * self.k_modes]
    }

    /// `Re u_k` over time, `mode` 1-based.
    pub fn real_part(&self, mode: usize) -> Vec<f64> {
        self.states.iter().skip(mode - 1).step_by(self.k_modes).map(|c| c.re).collect()
    }

    pub fn max_amplitude(&self) -> f64 {
        self.states.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Noise stream `stream` of root seed `seed`. Streams are independent, so
/// ensemble member `i` does not depend on how members are scheduled.
pub fn noise_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs the reduced stochastic system for `steps` steps from an observed
/// window (flat time-major, at least [`init_window_len`] states).
///
/// `ξ` is zero before the first regressor target and is estimated from the
/// window afterwards; new noise is drawn from `rng`.
pub fn simulate(params: &NarmaxParams, window: &[C64], steps: usize, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
    params.validate()?;
    let k = params.k_modes;
    let layout = params.layout();
    let m = init_window_len(params.orders);
    if window.len() % k != 0 || window.len() / k < m {
        return Err(Error::Argument(format!(
            "initialization window needs {m} states of {k} modes, got {} values",
            window.len()
        )));
    }
    crate::spectral::check_finite(window)?;
    let delta = params.delta;
    let mut model = ReducedModel::new(params.length, k)?;
    let thetas: Vec<Vec<f64>> = params.modes.iter().map(|p| p.theta()).collect();
    let sigmas: Vec<f64> = params.modes.iter().map(|p| p.sigma2.sqrt()).collect();
    let t0 = layout.first_target();
    let keep = params.orders.max_lag() + 1;

    let times = window.len() / k;
    let mut u = window.to_vec();
    let mut r = vec![C64::new(0.0, 0.0); u.len()];
    let mut z = vec![C64::new(0.0, 0.0); u.len()];
    let mut xi = vec![C64::new(0.0, 0.0); u.len()];
    for t in 0..times {
        model.rdelta_into(&window[t * k..(t + 1) * k], delta, &mut r[t * k..(t + 1) * k]);
    }
    for t in 1..times {
        for i in 0..k {
            z[t * k + i] = (u[t * k + i] - u[(t - 1) * k + i]) / delta - r[(t - 1) * k + i];
        }
    }
    let mut ext = vec![C64::new(0.0, 0.0); 2 * k];
    let mut row = vec![C64::new(0.0, 0.0); layout.len()];
    for t in t0..times {
        for mode in 1..=k {
            let h = History { k_modes: k, u: &u, rdelta: &r, z: &z, xi: &xi };
            fill_row(&h, &layout, mode, t - 1, &mut ext, &mut row)?;
            let i = t * k + mode - 1;
            xi[i] = z[i] - evaluate(&thetas[mode - 1], &row);
        }
    }

    let mut out = Vec::with_capacity(steps * k);
    let mut phi = vec![C64::new(0.0, 0.0); k];
    let mut noise = vec![C64::new(0.0, 0.0); k];
    for step in 1..=steps {
        let n = u.len() / k - 1;
        for mode in 1..=k {
            let h = History { k_modes: k, u: &u, rdelta: &r, z: &z, xi: &xi };
            fill_row(&h, &layout, mode, n, &mut ext, &mut row)?;
            phi[mode - 1] = evaluate(&thetas[mode - 1], &row);
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            noise[mode - 1] = C64::new(a, b) * sigmas[mode - 1];
        }
        for i in 0..k {
            let zi = phi[i] + noise[i];
            let next = u[n * k + i] + r[n * k + i] * delta + zi * delta;
            if !(next.norm() <= UNSTABLE_AMPLITUDE) {
                return Err(Error::Unstable { step });
            }
            u.push(next);
            z.push(zi);
            xi.push(noise[i]);
        }
        let new = &u[(n + 1) * k..];
        out.extend_from_slice(new);
        let mut rn = vec![C64::new(0.0, 0.0); k];
        model.rdelta_into(new, delta, &mut rn);
        r.extend_from_slice(&rn);
        if u.len() / k > keep + 256 {
            let drop = (u.len() / k - keep) * k;
            for buf in [&mut u, &mut r, &mut z, &mut xi] {
                buf.drain(..drop);
            }
        }
    }
    Ok(Trajectory { k_modes: k, delta, states: out })
}

/// Same as [`simulate`], for a model fitted with the linear structure.
pub fn simulate_armax(params: &NarmaxParams, window: &[C64], steps: usize, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
    if params.structure != Structure::Armax {
        return Err(Error::Argument("simulate_armax needs a model with the linear structure".into()));
    }
    simulate(params, window, steps, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // 2π/√0.085
    const L: f64 = 2.0 * PI / 0.291_547_594_742_265;

    fn window(k: usize, times: usize) -> Vec<C64> {
        (0..k * times).map(|i| C64::new(0.3 * (i as f64 * 0.7).sin(), 0.2 * (i as f64 * 0.3).cos())).collect()
    }

    #[test]
    fn zero_model_is_the_truncated_map() {
        let orders = Orders::new(0, 2, 1).unwrap();
        let length = L;
        let p = NarmaxParams::zero(orders, Structure::Narmax, 5, 0.1, length);
        let w = window(5, init_window_len(orders));
        let traj = simulate(&p, &w, 100, &mut noise_rng(1, 0)).unwrap();
        let mut model = ReducedModel::new(length, 5).unwrap();
        let mut u = w[w.len() - 5..].to_vec();
        let mut next = u.clone();
        for i in 0..100 {
            model.step_into(&u, 0.1, &mut next);
            std::mem::swap(&mut u, &mut next);
            assert_eq!(traj.state(i), &u[..]);
        }
    }

    #[test]
    fn seeded_runs_repeat_and_streams_differ() {
        let orders = Orders::new(1, 1, 1).unwrap();
        let mut p = NarmaxParams::zero(orders, Structure::Narmax, 3, 0.1, L);
        for m in &mut p.modes {
            m.sigma2 = 1e-4;
            m.a = vec![0.2];
            m.d = vec![0.5];
        }
        let w = window(3, 5);
        let a = simulate(&p, &w, 100, &mut noise_rng(9, 2)).unwrap();
        let b = simulate(&p, &w, 100, &mut noise_rng(9, 2)).unwrap();
        let c = simulate(&p, &w, 100, &mut noise_rng(9, 3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn blow_up_reports_step() {
        let orders = Orders::new(0, 1, 0).unwrap();
        let mut p = NarmaxParams::zero(orders, Structure::Armax, 2, 0.1, L);
        for m in &mut p.modes {
            m.b = vec![20.0];
        }
        match simulate(&p, &window(2, 3), 10_000, &mut noise_rng(0, 0)) {
            Err(Error::Unstable { step }) => assert!(step > 1 && step < 10_000),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn short_window_rejected() {
        let orders = Orders::new(2, 2, 0).unwrap();
        let p = NarmaxParams::zero(orders, Structure::Narmax, 2, 0.1, L);
        assert!(simulate(&p, &window(2, 4), 5, &mut noise_rng(0, 0)).is_err());
        assert!(simulate(&p, &window(2, 5), 5, &mut noise_rng(0, 0)).is_ok());
    }

    #[test]
    fn matches_hand_written_recursion_past_buffer_trimming() {
        let orders = Orders::new(2, 2, 1).unwrap();
        let (delta, length) = (0.1, L);
        let mut p = NarmaxParams::zero(orders, Structure::Armax, 1, delta, length);
        let (mu, a, b, d) = (0.01, [0.3, -0.1], [-0.5, 0.4], 0.2);
        p.modes[0].mu = mu;
        p.modes[0].a = a.to_vec();
        p.modes[0].b = b.to_vec();
        p.modes[0].d = vec![d];
        p.modes[0].sigma2 = 1e-2;
        let w = window(1, init_window_len(orders));
        let traj = simulate(&p, &w, 1000, &mut noise_rng(4, 0)).unwrap();

        let mut model = ReducedModel::new(length, 1).unwrap();
        let rd = |model: &mut ReducedModel, x: C64| {
            let mut out = [C64::new(0.0, 0.0)];
            model.rdelta_into(&[x], delta, &mut out);
            out[0]
        };
        let mut u = w.clone();
        let mut z = vec![C64::new(0.0, 0.0); u.len()];
        let mut xi = z.clone();
        for t in 1..u.len() {
            z[t] = (u[t] - u[t - 1]) / delta - rd(&mut model, u[t - 1]);
        }
        // First target is t = 3.
        for t in 3..u.len() {
            let phi = mu + a[0] * z[t - 1] + a[1] * z[t - 2] + b[0] * u[t - 1] + b[1] * u[t - 2] + d * xi[t - 1];
            xi[t] = z[t] - phi;
        }
        let mut rng = noise_rng(4, 0);
        for i in 0..1000 {
            let n = u.len() - 1;
            let phi = mu + a[0] * z[n] + a[1] * z[n - 1] + b[0] * u[n] + b[1] * u[n - 1] + d * xi[n];
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let e = C64::new(re, im) * 0.1;
            let zn = phi + e;
            let un = u[n] + rd(&mut model, u[n]) * delta + zn * delta;
            u.push(un);
            z.push(zn);
            xi.push(e);
            assert!((traj.state(i)[0] - un).norm() <= 1e-12 * (1.0 + un.norm()), "step {i}");
        }
    }
}
