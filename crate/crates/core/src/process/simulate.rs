use crate::error::{Error, Result};
use crate::rng::Streams;
use crate::student_t::TSampler;
use crate::timeseries::{Dated, ExogenousPanel, TimeSeries, YearMonth};

use super::model::{AnyModel, MarModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub series: TimeSeries,
    pub innovations: TimeSeries,
}

/// `max(200, 50 (r + s + 1))`, plus an allowance for seasonal factors.
pub fn default_burn(model: &AnyModel) -> usize {
    let b = model.base();
    let mut burn = 200.max(50 * (b.r() + b.s() + 1));
    if let AnyModel::Smar(m) = model {
        burn += 20 * (m.seasonal_lag().displacement + m.seasonal_lead().displacement);
    }
    burn
}

/// Runs the noncausal recursions backwards from zero terminal values, then
/// the causal ones forwards from zero initial values.
pub fn propagate(base: &MarModel, seasonal: Option<(super::SeasonalTerm, super::SeasonalTerm)>, z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let (sl, sd) = seasonal.unwrap_or_default();
    let mut w = z.to_vec();
    if sd.is_present() {
        for t in (0..n.saturating_sub(sd.displacement)).rev() {
            w[t] += sd.coeff * w[t + sd.displacement];
        }
    }
    let lead = base.lead_coeffs();
    let mut u = w;
    for t in (0..n).rev() {
        let mut acc = u[t];
        for (k, c) in lead.iter().enumerate() {
            if t + k + 1 < n {
                acc += c * u[t + k + 1];
            }
        }
        u[t] = acc;
    }
    if sl.is_present() {
        for t in sl.displacement..n {
            u[t] += sl.coeff * u[t - sl.displacement];
        }
    }
    let lag = base.lag_coeffs();
    let mut y = u;
    for t in 0..n {
        let mut acc = y[t];
        for (k, c) in lag.iter().enumerate() {
            if t > k {
                acc += c * y[t - k - 1];
            }
        }
        y[t] = acc;
    }
    y
}

/// Simulates `n` points of a MAR, SMAR or MARX process.
///
/// For MARX the regressors are held fixed and must span `n + 2 burn` months;
/// the output then starts `burn` months after the panel. Otherwise the output
/// is dated from `start`.
pub fn simulate(
    model: &AnyModel,
    n: usize,
    seed: u64,
    x: Option<&ExogenousPanel>,
    burn: Option<usize>,
    start: YearMonth,
) -> Result<Simulation> {
    if n == 0 {
        return Err(Error::InvalidArgument("simulation length must be >= 1".into()));
    }
    let burn = burn.unwrap_or_else(|| default_burn(model));
    let total = n + 2 * burn;
    let base = model.base();
    let noise = base.noise();
    let sampler = TSampler::new(noise.dof(), noise.scale())?;
    let mut rng = Streams::new(seed, "simulate").stream(0);
    let eps: Vec<f64> = (0..total).map(|_| sampler.sample(&mut rng)).collect();

    let mut z = eps.clone();
    let mut first_date = start;
    let seasonal = match model {
        AnyModel::Smar(m) => Some((m.seasonal_lag(), m.seasonal_lead())),
        _ => None,
    };
    if let AnyModel::Marx(m) = model {
        let x = x.ok_or_else(|| Error::InvalidArgument("a MARX simulation needs regressors".into()))?;
        if x.q() != m.q() || x.len() < total {
            return Err(Error::InsufficientData(format!(
                "MARX simulation needs {} regressors over {total} months, got {} over {}",
                m.q(),
                x.q(),
                x.len()
            )));
        }
        for (k, (b, o)) in m.beta().iter().zip(m.offsets()).enumerate() {
            let col = x.column(k);
            for (t, zt) in z.iter_mut().enumerate() {
                let i = t as i64 + o;
                if i >= 0 && (i as usize) < total {
                    *zt += b * col[i as usize];
                }
            }
        }
        first_date = x.start().add_months(burn as i64);
    }
    let y = propagate(base, seasonal, &z);
    Ok(Simulation {
        series: TimeSeries::new("y", first_date, y[burn..burn + n].to_vec())?,
        innovations: TimeSeries::new("eps", first_date, eps[burn..burn + n].to_vec())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::filter::residuals;
    use crate::process::model::{MarxModel, NoiseSpec, SeasonalTerm, SmarModel};

    fn ym() -> YearMonth {
        YearMonth::new(1990, 1).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn white_noise_when_coefficients_vanish() {
        let m = AnyModel::Mar(MarModel::mar11(0.0, 0.0, 4.0, 2.0).unwrap());
        let s = simulate(&m, 100, 7, None, None, ym()).unwrap();
        assert_eq!(s.series.values(), s.innovations.values());
    }

    #[test]
    fn deterministic() {
        let m = AnyModel::Mar(MarModel::mar11(0.5, 0.7, 4.0, 1.0).unwrap());
        let a = simulate(&m, 300, 11, None, None, ym()).unwrap();
        let b = simulate(&m, 300, 11, None, None, ym()).unwrap();
        let c = simulate(&m, 300, 12, None, None, ym()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn round_trip_all_families() {
        let base = MarModel::new(vec![0.4, 0.2], vec![0.6], NoiseSpec::new(3.5, 0.8).unwrap()).unwrap();
        let smar = AnyModel::Smar(
            SmarModel::new(base.clone(), SeasonalTerm::new(0.2, 12).unwrap(), SeasonalTerm::new(-0.3, 12).unwrap()).unwrap(),
        );
        let s = simulate(&smar, 400, 3, None, None, ym()).unwrap();
        let e = residuals(&s.series, &smar, None).unwrap();
        assert_eq!(e.len(), 400 - 14 - 13);
        assert!(max_abs_diff(e.values(), &s.innovations.values()[14..]) < 1e-8);

        let marx = AnyModel::Marx(MarxModel::new(base, vec![1.5, -0.5], vec![1, -1]).unwrap());
        let len = 300 + 2 * 200;
        let cols = vec![
            (0..len).map(|i| (i as f64 * 0.1).sin()).collect(),
            (0..len).map(|i| (i as f64 * 0.03).cos()).collect(),
        ];
        let x = ExogenousPanel::new(ym(), vec!["a".into(), "b".into()], cols).unwrap();
        let s = simulate(&marx, 300, 5, Some(&x), Some(200), ym()).unwrap();
        assert_eq!(s.series.start(), ym().add_months(200));
        let e = residuals(&s.series, &marx, Some(&x)).unwrap();
        assert!(max_abs_diff(e.values(), &s.innovations.values()[2..]) < 1e-8);
    }

    #[test]
    fn ar1_autocorrelation() {
        let m = AnyModel::Mar(MarModel::new(vec![0.58], vec![], NoiseSpec::new(5.0, 1.0).unwrap()).unwrap());
        let s = simulate(&m, 50_000, 1, None, None, ym()).unwrap();
        let y = s.series.values();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let c0: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        let c1: f64 = y.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        assert!((c1 / c0 - 0.58).abs() < 0.02);
    }
}
