use optqrm::experiment::{run_backtest, BacktestConfig};
use optqrm::interp::{extrapolate, fit_quadratic};
use optqrm::market_sim::{
    build_market_series, parse_series, series_to_csv, simulate_gbm_path, SimConfig,
};
use optqrm::pricing::{bs_call_price, OptionSpec, VolPair, ONE_DAY};
use optqrm::prob_strategy::{
    ideal_signal, majority_normal_approx, majority_profit_probability, nonideal_signal,
    required_probability, trade_win_probability, zeta_dispersion, Action, StrategyParams,
};
use optqrm::qrm::BandedSym;
use proptest::prelude::*;

proptest! {
    #[test]
    fn swapping_vols_complements_probability(s in 0.01f64..1.0, h in 0.01f64..1.0, days in 1u32..300) {
        let eps = days as f64 * ONE_DAY;
        let p = trade_win_probability(VolPair::new(s, h).unwrap(), eps).unwrap();
        let q = trade_win_probability(VolPair::new(h, s).unwrap(), eps).unwrap();
        prop_assert!((p + q - 1.0).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&p));
        if s > h {
            prop_assert!(p >= 0.5);
        } else if s < h {
            prop_assert!(p <= 0.5);
        }
    }

    #[test]
    fn required_probability_reaches_confidence(conf in 0.51f64..0.999, n in 1usize..5000) {
        let p = required_probability(conf, n).unwrap();
        prop_assert!(p > 0.5 && p < 1.0);
        let got = majority_normal_approx(p, n).unwrap();
        prop_assert!(got >= conf - 1e-9, "{got} < {conf}");
    }

    #[test]
    fn majority_probability_grows_with_p(p in 0.01f64..0.98, dp in 0.001f64..0.01, n in 1usize..400) {
        let a = majority_profit_probability(p, n).unwrap();
        let b = majority_profit_probability(p + dp, n).unwrap();
        prop_assert!(b >= a - 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn corridor_is_symmetric_and_bounded(p in 0.0f64..=1.0, n in 1usize..10_000) {
        let d = zeta_dispersion(p, n).unwrap();
        let e = zeta_dispersion(1.0 - p, n).unwrap();
        // 1 - p is rounded, so allow a few ulps
        prop_assert!((d - e).abs() <= 2.0 * f64::EPSILON / n as f64);
        prop_assert!(d >= 0.0 && d <= 0.25 / n as f64 + 1e-18);
    }

    #[test]
    fn forecast_rule_partitions_outcomes(pred in -10.0f64..10.0, now in -10.0f64..10.0, eta in 0.0f64..2.0) {
        let sig = nonideal_signal(pred, now, eta);
        let buy = pred >= now + eta;
        let short = pred < now - eta;
        prop_assert!(!(buy && short));
        let expected = if buy { Action::Buy } else if short { Action::Short } else { Action::Abstain };
        prop_assert_eq!(sig.action, expected);
        prop_assert_eq!(sig.reevaluate(), sig.action);
    }

    #[test]
    fn ideal_rule_reads_only_the_gap(s in 0.01f64..1.0, h in 0.01f64..1.0) {
        let params = StrategyParams::default();
        let sig = ideal_signal(VolPair::new(s, h).unwrap(), &params);
        let gap = s - h;
        let expected = if gap >= params.beta1 {
            Action::Buy
        } else if gap <= params.beta2 {
            Action::Short
        } else {
            Action::Abstain
        };
        prop_assert_eq!(sig.action, expected);
        prop_assert_eq!(sig.reevaluate(), sig.action);
    }

    #[test]
    fn quadratic_fit_interpolates_its_nodes(a in -1e3f64..1e3, b in -1e2f64..1e2, c in -10.0f64..10.0) {
        let y = ONE_DAY;
        let f = |t: f64| (a * t + b) * t + c;
        let q = fit_quadratic(f(-2.0 * y), f(-y), f(0.0), y).unwrap();
        for t in [0.0, 0.5 * y, y, 2.0 * y] {
            let got = extrapolate(&q, t, y).unwrap();
            prop_assert!((got - f(t)).abs() <= 1e-9 * (1.0 + f(t).abs()));
        }
    }

    #[test]
    fn call_price_respects_no_arbitrage_bounds(s in 10.0f64..300.0, tau in 0.001f64..2.0, vol in 0.01f64..1.5) {
        let spec = OptionSpec::standard();
        let v = bs_call_price(s, tau, &spec, vol).unwrap();
        prop_assert!(v > 0.0);
        prop_assert!(v >= (s - spec.strike).max(0.0));
        prop_assert!(v <= s);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn banded_matvec_matches_dense(n in 1usize..12, bw in 0usize..4, seed in any::<u64>()) {
        let bw = bw.min(n.saturating_sub(1));
        let mut m = BandedSym::zeros(n, bw);
        let mut dense = vec![vec![0.0; n]; n];
        let mut state = seed | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % 2001) as f64 / 1000.0 - 1.0
        };
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                let v = next();
                m.add(i, j, v);
                dense[i][j] += v;
                if i != j {
                    dense[j][i] += v;
                }
            }
        }
        let x: Vec<f64> = (0..n).map(|_| next()).collect();
        let got = m.matvec(&x);
        for i in 0..n {
            let want: f64 = (0..n).map(|j| dense[i][j] * x[j]).sum();
            prop_assert!((got[i] - want).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn series_csv_round_trip_is_stable(seed in any::<u64>(), sigma_hat in 0.05f64..0.6, n in 5usize..60) {
        let sim = SimConfig { n_days: n, seed, ..SimConfig::default() };
        let path = simulate_gbm_path(&sim).unwrap();
        let series = build_market_series(&path, sigma_hat, &sim).unwrap();
        let text = series_to_csv(&series);
        let back = parse_series(&text).unwrap();
        prop_assert_eq!(series_to_csv(&back), text);
        prop_assert_eq!(back.len(), n);
    }

    #[test]
    fn every_window_is_accounted_for(seed in 0u64..1000, sigma_hat in 0.05f64..0.4, n in 1usize..25) {
        let sim = SimConfig { n_days: n + 4, seed, maturity_days: 12, ..SimConfig::default() };
        let path = simulate_gbm_path(&sim).unwrap();
        let series = build_market_series(&path, sigma_hat, &sim).unwrap();
        let cfg = BacktestConfig { n_x: 12, n_t: 12, n_windows: Some(n), ..BacktestConfig::default() };
        let res = run_backtest(&series, sigma_hat, &cfg).unwrap();
        prop_assert_eq!(res.records.len(), n);
        prop_assert_eq!(res.windows_used() + res.windows_skipped(), n);
        prop_assert_eq!(res.outcomes.len(), res.windows_used());
        let scored = res.records.iter().filter(|r| r.xi_bar.is_some()).count();
        prop_assert_eq!(scored, res.windows_used());
    }
}
