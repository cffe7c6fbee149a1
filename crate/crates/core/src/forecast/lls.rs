use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::process::AnyModel;
use crate::rng::Streams;
use crate::student_t::{TDensity, TSampler};
use crate::timeseries::{BoundsSeries, Dated, TimeSeries};

use super::paths::{bounds_at, weighted_median, Method, ProbabilityForecast, Settings};

pub const DEFAULT_TRUNCATION: usize = 50;

/// Self-normalized weights from log weights. Returns the weights and the
/// effective sample size `1 / sum w^2`.
pub fn normalize_log_weights(log_w: &[f64]) -> Option<(Vec<f64>, f64)> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let raw: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let ess = 1.0 / w.iter().map(|v| v * v).sum::<f64>();
    Some((w, ess))
}

/// Degeneracy rule shared by the importance samplers.
pub fn check_ess(ess: f64, n: usize) -> Result<()> {
    if ess < n as f64 / 1000.0 || !ess.is_finite() {
        Err(Error::DegenerateImportance { ess, n })
    } else {
        Ok(())
    }
}

pub(crate) fn mar11_parts(model: &AnyModel) -> Result<(f64, f64, TDensity, TSampler)> {
    let AnyModel::Mar(m) = model else {
        return Err(Error::Unsupported(format!(
            "this forecaster needs a MAR(1,1), got a {} model",
            model.kind()
        )));
    };
    let (phi, psi) = m.mar11_coeffs()?;
    let noise = m.noise();
    Ok((
        phi,
        psi,
        TDensity::new(noise.dof(), noise.scale()),
        TSampler::new(noise.dof(), noise.scale())?,
    ))
}

/// Simulations-based probability that `y_{T+h}` falls inside the bounds.
///
/// Each of `n` draws is a vector of `m` future errors. The noncausal
/// component is truncated at `m` terms, `y_{T+h}` is rebuilt from it by the
/// causal recursion, and every draw is weighted by the error density of the
/// implied `eps_T = u_T - psi u_{T+1}`.
pub fn lls_probability(
    model: &AnyModel,
    series: &TimeSeries,
    bounds: &BoundsSeries,
    h: usize,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<ProbabilityForecast> {
    let (phi, psi, g, sampler) = mar11_parts(model)?;
    if h == 0 || 2 * h > m {
        return Err(Error::InvalidArgument(format!(
            "horizon {h} must satisfy 1 <= h <= M/2 with M = {m}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one simulation".into()));
    }
    let y = series.values();
    if y.len() < 2 {
        return Err(Error::InsufficientData("need the last two observations".into()));
    }
    let y_t = y[y.len() - 1];
    let u_t = y_t - phi * y[y.len() - 2];
    let (lb, ub) = bounds_at(bounds, series.end(), h)?;
    let base = phi.powi(h as i32) * y_t;
    let streams = Streams::new(seed, "lls");

    // (log weight, class, value): class 0 below, 1 inside, 2 above.
    let draws: Vec<(f64, u8, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = streams.stream(j);
            let eps: Vec<f64> = (0..m).map(|_| sampler.sample(&mut rng)).collect();
            // u[k-1] = sum_{i=0}^{m-k} psi^i eps_{T+k+i}
            let mut u = vec![0.0; m];
            let mut acc = 0.0;
            for k in (0..m).rev() {
                acc = eps[k] + psi * acc;
                u[k] = acc;
            }
            let mut value = base;
            let mut pow = 1.0;
            for i in 0..h {
                value += pow * u[h - 1 - i];
                pow *= phi;
            }
            let class = if value <= lb {
                0
            } else if value <= ub {
                1
            } else {
                2
            };
            (g.ln_pdf(u_t - psi * u[0]), class, value)
        })
        .collect();
    let log_w: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let (w, ess) = normalize_log_weights(&log_w).ok_or(Error::DegenerateImportance { ess: 0.0, n })?;
    check_ess(ess, n)?;
    let mut mass = [0.0; 3];
    for (wi, (_, c, _)) in w.iter().zip(&draws) {
        mass[*c as usize] += wi;
    }
    let mut weighted: Vec<(f64, f64)> = draws.iter().zip(&w).map(|(d, wi)| (d.2, *wi)).collect();
    let mean = weighted.iter().map(|(v, wi)| v * wi).sum();
    let mut f = ProbabilityForecast::from_masses(
        series.end(),
        h,
        mass[0],
        mass[1],
        mass[2],
        Method::Lls,
        Settings {
            draws: n,
            truncation: Some(m),
            resample: None,
            seed,
        },
    )?;
    f.ess = Some(ess);
    f.point_mean = Some(mean);
    f.point_median = Some(weighted_median(&mut weighted));
    Ok(f)
}
