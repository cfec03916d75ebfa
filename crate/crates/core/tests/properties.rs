use ks_narmax::data_gen::FullRunConfig;
use ks_narmax::etdrk4::Etdrk4;
use ks_narmax::features::{evaluate, extend_modes, Structure};
use ks_narmax::narmax::{fit_ls, noise_rng, residuals, simulate, ModeParams, NarmaxParams, Orders, TrainingData};
use ks_narmax::spectral::{FourierGrid, RhsEvaluator, C64};
use ks_narmax::validation::{ensemble_forecast, mean_real, ForecastConfig, NarmaxForecaster};
use proptest::prelude::*;

fn length() -> f64 {
    FullRunConfig::paper().length
}

fn field(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n / 2 + 1).prop_map(move |pairs| {
        let mut v: Vec<C64> = pairs.into_iter().map(|(a, b)| C64::new(a, b)).collect();
        v[0] = C64::new(0.0, 0.0);
        v[n / 2] = C64::new(0.0, 0.0);
        v
    })
}

fn grid_and_field() -> impl Strategy<Value = (usize, Vec<C64>)> {
    (4usize..=32).prop_flat_map(|h| {
        let n = 2 * h;
        (Just(n), field(n))
    })
}

fn states(k: usize, times: std::ops::Range<usize>) -> impl Strategy<Value = Vec<C64>> {
    times.prop_flat_map(move |t| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), t * k)
            .prop_map(|p| p.into_iter().map(|(a, b)| C64::new(a, b)).collect::<Vec<_>>())
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn quadratic_term_transfers_no_energy((n, v) in grid_and_field(), l in 5.0f64..40.0) {
        let grid = FourierGrid::new(l, n).unwrap();
        let mut nl = vec![C64::new(0.0, 0.0); grid.modes()];
        RhsEvaluator::new(&grid).nonlinear_into(&v, &mut nl);
        let transfer: f64 = v.iter().zip(&nl).map(|(a, b)| (a.conj() * b).re).sum();
        prop_assert!(transfer.abs() < 1e-10, "transfer {transfer:e}");
    }

    #[test]
    fn dealiased_product_is_exact((n, v) in grid_and_field()) {
        let grid = FourierGrid::new(length(), n).unwrap();
        let mut a = vec![C64::new(0.0, 0.0); grid.modes()];
        let mut b = a.clone();
        RhsEvaluator::new(&grid).rhs_into(&v, &mut a);
        RhsEvaluator::with_transform_len(&grid, 4 * n).rhs_into(&v, &mut b);
        let scale = b.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * scale, "difference {err:e}");
    }

    #[test]
    fn integration_is_bit_reproducible(v in field(32), steps in 1usize..200) {
        let grid = FourierGrid::new(length(), 32).unwrap();
        let run = || {
            let mut s = Etdrk4::new(RhsEvaluator::new(&grid), 0.01).unwrap();
            let mut x = v.clone();
            for _ in 0..steps {
                s.step(&mut x);
            }
            x
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn extended_modes_scale_quadratically(u in states(5, 1..2), e in -3i32..3) {
        let alpha = 2f64.powi(e);
        let scaled: Vec<C64> = u.iter().map(|c| c * alpha).collect();
        let (a, b) = (extend_modes(&u), extend_modes(&scaled));
        for j in 1..=10i64 {
            let power = if j <= 5 { 1 } else { 2 };
            prop_assert_eq!(b.get(j), a.get(j) * alpha.powi(power));
        }
    }

    #[test]
    fn closure_is_linear_in_coefficients(
        row in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
        t1 in prop::collection::vec(-1.0f64..1.0, 12),
        t2 in prop::collection::vec(-1.0f64..1.0, 12),
    ) {
        let row: Vec<C64> = row.into_iter().map(|(a, b)| C64::new(a, b)).collect();
        let sum: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| a + b).collect();
        let lhs = evaluate(&sum, &row);
        let rhs = evaluate(&t1, &row) + evaluate(&t2, &row);
        prop_assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn least_squares_fit_minimizes_residuals(u in states(3, 40..90), j in 0usize..9, sign in prop::bool::ANY) {
        let orders = Orders::new(1, 1, 0).unwrap();
        let data = TrainingData::from_states(&u, 3, 0.1, length()).unwrap();
        let p = fit_ls(&data, orders, Structure::Narmax).unwrap();
        let layout = p.layout();
        let cost = |params: &NarmaxParams, mode: usize| -> f64 {
            residuals(params, &data).unwrap().iter().skip(mode).step_by(3).map(|x| x.norm_sqr()).sum()
        };
        for mode in 0..3 {
            let mut theta = p.modes[mode].theta();
            let j = j % theta.len();
            theta[j] += if sign { 1e-3 } else { -1e-3 } * (1.0 + theta[j].abs());
            let mut q = p.clone();
            q.modes[mode] = ModeParams::from_theta(mode + 1, &layout, &theta, p.modes[mode].sigma2);
            let (best, moved) = (cost(&p, mode), cost(&q, mode));
            prop_assert!(moved >= best * (1.0 - 1e-9), "mode {}: {moved:e} < {best:e}", mode + 1);
        }
    }

    #[test]
    fn seeded_simulation_repeats(window in states(3, 5..6), seed in 0u64..1000, stream in 0u64..8) {
        let mut p = NarmaxParams::zero(Orders::new(0, 2, 1).unwrap(), Structure::Narmax, 3, 0.1, length());
        for m in &mut p.modes {
            m.sigma2 = 1e-4;
        }
        let a = simulate(&p, &window, 50, &mut noise_rng(seed, stream));
        let b = simulate(&p, &window, 50, &mut noise_rng(seed, stream));
        prop_assert_eq!(a.map(|t| t.states).ok(), b.map(|t| t.states).ok());
    }

    #[test]
    fn forecast_scores_are_bounded(data in states(3, 120..200), n_ens in 1usize..4) {
        let f = NarmaxForecaster::truncated(3, 0.1, length());
        let mean = mean_real(&data, 3);
        let cfg = ForecastConfig { n0: 4, n_ens, t_lag: 2.0, delta: 0.1, window: 3 };
        let r = ensemble_forecast(&f, &data, &mean, &cfg).unwrap();
        prop_assert!(r.rmse.iter().all(|x| *x >= 0.0));
        prop_assert!(r.ancr.iter().all(|x| (-1.0..=1.0).contains(x)));
    }
}
