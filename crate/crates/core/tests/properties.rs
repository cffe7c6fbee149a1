use proptest::prelude::*;

use noncausal::credibility::{roc_curve, CredibilityIndex, Outcome, OutcomeSeries};
use noncausal::estimation::{acf, fit_mar_amle, select_mar};
use noncausal::forecast::{gj_probability, lls_probability, sir_forecast, SirSettings};
use noncausal::process::{check_stationarity, expand_additive, residuals, simulate, AnyModel, LagPolynomial, MarModel, NoiseSpec};
use noncausal::timeseries::{read_series, write_series, yoy_log_inflation, BoundsSeries, Dated, TimeSeries, YearMonth};

fn ym(y: i32, m: u32) -> YearMonth {
    YearMonth::new(y, m).unwrap()
}

fn mar11(phi: f64, psi: f64, dof: f64, scale: f64) -> AnyModel {
    AnyModel::Mar(MarModel::mar11(phi, psi, dof, scale).unwrap())
}

/// Step-down recursion on `x_t = c_1 x_{t-1} + ... + c_k x_{t-k}`: stationary
/// iff every reflection coefficient has modulus below one.
fn schur_cohn(coeffs: &[f64]) -> bool {
    let mut a = coeffs.to_vec();
    while let Some(&kappa) = a.last() {
        if kappa.abs() >= 1.0 {
            return false;
        }
        let k = a.len();
        let d = 1.0 - kappa * kappa;
        a = (0..k - 1).map(|j| (a[j] + kappa * a[k - 2 - j]) / d).collect();
    }
    true
}

fn stationary_pair() -> impl Strategy<Value = (f64, f64)> {
    (-0.9f64..0.9, -0.9f64..0.9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn stationarity_matches_schur_cohn(coeffs in prop::collection::vec(-2.5f64..2.5, 0..=5)) {
        let report = check_stationarity(&LagPolynomial::backward(coeffs.clone()));
        let margin = report.root_moduli.iter().map(|m| (m - 1.0).abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(margin > 1e-6);
        prop_assert_eq!(report.stationary, schur_cohn(&coeffs));
        prop_assert_eq!(report.root_moduli.len(), coeffs.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_prices_recoverable_from_yoy(prices in prop::collection::vec(1.0f64..1e4, 13..80)) {
        let p = TimeSeries::new("p", ym(1990, 1), prices.clone()).unwrap();
        let pi = yoy_log_inflation(&p).unwrap();
        prop_assert_eq!(pi.start(), ym(1991, 1));
        let mut logs: Vec<f64> = prices[..12].iter().map(|v| v.ln()).collect();
        for (t, v) in pi.values().iter().enumerate() {
            logs.push(logs[t] + v / 100.0);
        }
        for (got, p) in logs.iter().zip(&prices) {
            prop_assert!((got - p.ln()).abs() <= 1e-10 * p.ln().abs().max(1.0));
        }
    }

    #[test]
    fn series_csv_round_trip(values in prop::collection::vec(-1e6f64..1e6, 1..60), year in 1900i32..2100, month in 1u32..=12) {
        let s = TimeSeries::new("y", ym(year, month), values).unwrap();
        let mut buf = Vec::new();
        write_series(&mut buf, &s).unwrap();
        let back = read_series(buf.as_slice(), "y").unwrap();
        prop_assert_eq!(&back, &s);
        let mut again = Vec::new();
        write_series(&mut again, &back).unwrap();
        prop_assert_eq!(again, buf);
    }

    #[test]
    fn restrict_is_idempotent(len in 10usize..60, a in 0usize..5, b in 0usize..5) {
        let s = TimeSeries::new("y", ym(2000, 1), (0..len).map(|i| i as f64).collect()).unwrap();
        let (from, to) = (s.start().add_months(a as i64), s.end().add_months(-(b as i64)));
        let once = s.restrict(from, to).unwrap();
        prop_assert_eq!(once.restrict(from, to).unwrap(), once.clone());
        prop_assert_eq!(once.len(), len - a - b);
    }

    #[test]
    fn simulation_round_trip_and_determinism(
        (phi, psi) in stationary_pair(),
        dof in 2.5f64..12.0,
        scale in 0.1f64..5.0,
        seed in any::<u64>(),
    ) {
        let model = mar11(phi, psi, dof, scale);
        let a = simulate(&model, 200, seed, None, None, ym(2000, 1)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| simulate(&model, 200, seed, None, None, ym(2000, 1)).unwrap());
        prop_assert_eq!(&a.series, &b.series);
        let resid = residuals(&a.series, &model, None).unwrap();
        let offset = a.innovations.start().months_until(resid.start());
        prop_assert!(offset >= 0);
        for (i, e) in resid.values().iter().enumerate() {
            prop_assert!((e - a.innovations.values()[offset as usize + i]).abs() < 1e-8);
        }
    }

    #[test]
    fn additive_weights_sum((phi, psi) in stationary_pair()) {
        let e = expand_additive(&mar11(phi, psi, 4.0, 1.0)).unwrap();
        prop_assert!((e.weight(-1) + e.weight(1) - (phi + psi) / (1.0 + phi * psi)).abs() < 1e-12);
    }

    #[test]
    fn acf_is_normalised(x in prop::collection::vec(-10f64..10.0, 5..80)) {
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-6));
        let r = acf(&x, 4);
        prop_assert!((r[0] - 1.0).abs() < 1e-12);
        prop_assert!(r.iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn roc_points_monotone_with_exact_endpoints(raw in prop::collection::vec((0u8..=20, any::<bool>()), 2..40)) {
        prop_assume!(raw.iter().any(|r| r.1) && raw.iter().any(|r| !r.1));
        let dates: Vec<YearMonth> = (0..raw.len()).map(|i| ym(2000, 1).add_months(i as i64)).collect();
        let index = CredibilityIndex::from_pairs("i", dates.iter().zip(&raw).map(|(d, r)| (*d, r.0 as f64 / 20.0))).unwrap();
        let outcomes = OutcomeSeries::new(dates.iter().zip(&raw).map(|(d, r)| (*d, if r.1 { Outcome::In } else { Outcome::Out })).collect());
        let curve = roc_curve(&index, &outcomes, None).unwrap();
        let (first, last) = (curve.points.first().unwrap(), curve.points.last().unwrap());
        prop_assert_eq!((first.fpr, first.tpr), (1.0, 1.0));
        prop_assert_eq!((last.fpr, last.tpr), (0.0, 0.0));
        for w in curve.points.windows(2) {
            prop_assert!(w[0].threshold < w[1].threshold);
            prop_assert!(w[1].fpr <= w[0].fpr && w[1].tpr <= w[0].tpr);
        }
        prop_assert!((0.0..=1.0).contains(&curve.auc));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn forecasts_split_mass_and_respect_widening(
        (phi, psi) in (0.1f64..0.8, 0.1f64..0.8),
        seed in 0u64..1000,
        lo in -2.0f64..0.0,
        width in 0.1f64..2.0,
        extra in 0.1f64..1.0,
    ) {
        let model = mar11(phi, psi, 5.0, 1.0);
        let y = simulate(&model, 300, seed, None, None, ym(2000, 1)).unwrap().series;
        let narrow = BoundsSeries::constant(y.start(), y.len() + 3, lo, lo + width).unwrap();
        let wide = BoundsSeries::constant(y.start(), y.len() + 3, lo - extra, lo + width + extra).unwrap();
        let sir = sir_forecast(&model, &y, 3, &SirSettings::new(2000, 500, seed)).unwrap();
        let pairs = [
            (lls_probability(&model, &y, &narrow, 2, 5000, 50, seed).unwrap(), lls_probability(&model, &y, &wide, 2, 5000, 50, seed).unwrap()),
            (gj_probability(&model, &y, &narrow, 801).unwrap(), gj_probability(&model, &y, &wide, 801).unwrap()),
            (sir.probability(&narrow).unwrap(), sir.probability(&wide).unwrap()),
            (sir.resampled_probability(&narrow).unwrap(), sir.resampled_probability(&wide).unwrap()),
        ];
        for (n, w) in pairs {
            for f in [&n, &w] {
                prop_assert!((f.p_in_bounds + f.p_below + f.p_above - 1.0).abs() < 1e-9);
                for p in [f.p_in_bounds, f.p_below, f.p_above] {
                    prop_assert!((0.0..=1.0).contains(&p));
                }
            }
            prop_assert!(w.p_in_bounds >= n.p_in_bounds - 1e-12);
        }
        let w = sir.weighted.weights().unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12 && w.iter().all(|v| *v >= 0.0));
        prop_assert!(sir.paths.paths().iter().all(|p| p.len() == 3));
    }

    #[test]
    fn forecasts_ignore_thread_count((phi, psi) in (0.1f64..0.8, 0.1f64..0.8), seed in any::<u64>()) {
        let model = mar11(phi, psi, 4.0, 1.0);
        let y = simulate(&model, 200, seed, None, None, ym(2000, 1)).unwrap().series;
        let b = BoundsSeries::constant(y.start(), y.len() + 2, -1.0, 1.0).unwrap();
        let run = || {
            (
                lls_probability(&model, &y, &b, 2, 4000, 50, seed).unwrap(),
                sir_forecast(&model, &y, 2, &SirSettings::new(1000, 200, seed)).unwrap().paths,
            )
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
        prop_assert_eq!(one.0, four.0);
        prop_assert_eq!(one.1.paths(), four.1.paths());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn amle_scale_equivariance_and_stationary_gradient(seed in 0u64..10_000, c in 0.2f64..20.0) {
        let model = mar11(0.5, 0.8, 4.0, 1.0);
        let y = simulate(&model, 250, seed, None, None, ym(2000, 1)).unwrap().series;
        let scaled = TimeSeries::new("y", y.start(), y.values().iter().map(|v| c * v).collect()).unwrap();
        let a = fit_mar_amle(&y, 1, 1, 8).unwrap();
        let b = fit_mar_amle(&scaled, 1, 1, 8).unwrap();
        let (pa, pb) = (a.model.base(), b.model.base());
        for (u, v) in pa.lag_coeffs().iter().chain(pa.lead_coeffs()).zip(pb.lag_coeffs().iter().chain(pb.lead_coeffs())) {
            prop_assert!((u - v).abs() < 1e-4, "{u} vs {v}");
        }
        prop_assert!((pa.noise().dof() - pb.noise().dof()).abs() < 1e-3 * pa.noise().dof());
        prop_assert!((c * pa.noise().scale() / pb.noise().scale() - 1.0).abs() < 1e-4);
        for f in [&a, &b] {
            if f.converged {
                prop_assert!(f.grad_norm < 1e-4 * (1.0 + f.loglik.abs()), "gradient {}", f.grad_norm);
            }
        }
    }

    #[test]
    fn select_mar_fits_every_split(seed in 0u64..10_000, p in 1usize..=3) {
        let y = simulate(&mar11(0.4, 0.6, 4.0, 1.0), 200, seed, None, None, ym(2000, 1)).unwrap().series;
        let sel = select_mar(&y, p, 4).unwrap();
        prop_assert_eq!(sel.candidates.len(), p + 1);
        let mut splits: Vec<(usize, usize)> = sel.candidates.iter().map(|f| (f.model.base().r(), f.model.base().s())).collect();
        splits.sort();
        prop_assert_eq!(splits, (0..=p).map(|r| (r, p - r)).collect::<Vec<_>>());
        let top = sel.candidates.iter().map(|f| f.loglik).fold(f64::NEG_INFINITY, f64::max);
        let winner = sel.candidates.iter().rev().find(|f| f.loglik == top).unwrap();
        prop_assert_eq!(winner.shape(), sel.best.shape());
    }
}

#[test]
fn noise_spec_rejects_infinite_variance() {
    assert!(NoiseSpec::new(2.0, 1.0).is_err());
    assert!(NoiseSpec::new(3.0, 0.0).is_err());
}
