use crate::error::{Error, Result};
use crate::timeseries::{Dated, TimeSeries, YearMonth};

use super::amle::FitResult;
use super::pseudo_causal::fit_pseudo_causal;
use super::select::select_mar;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    /// Sample autocorrelations for lags `0..=max_lag`.
    pub acf: Vec<f64>,
    /// Lags `k >= 1` with `|acf(k)| > 2 / sqrt(n)`.
    pub significant_displacements: Vec<usize>,
    pub jarque_bera: f64,
    pub jarque_bera_p: f64,
}

/// Sample autocorrelation, centred, with the usual `1/n` normalization.
pub fn acf(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    (0..=max_lag)
        .map(|k| {
            if c0 == 0.0 {
                return if k == 0 { 1.0 } else { 0.0 };
            }
            x.iter().zip(&x[k.min(n)..]).map(|(a, b)| (a - mean) * (b - mean)).sum::<f64>() / c0
        })
        .collect()
}

/// Jarque-Bera statistic and its chi-square(2) p-value.
pub fn jarque_bera(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 {
        return (0.0, 1.0);
    }
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    let jb = n * (skew * skew / 6.0 + (kurt - 3.0).powi(2) / 24.0);
    (jb, (-0.5 * jb).exp())
}

pub fn diagnostics(residuals: &TimeSeries, max_lag: usize) -> Result<DiagnosticsReport> {
    let x = residuals.values();
    if x.len() <= max_lag + 5 {
        return Err(Error::InsufficientData(format!(
            "diagnostics up to lag {max_lag} need more than {} residuals, got {}",
            max_lag + 5,
            x.len()
        )));
    }
    let acf = acf(x, max_lag);
    let band = 2.0 / (x.len() as f64).sqrt();
    let significant_displacements = (1..=max_lag).filter(|k| acf[*k].abs() > band).collect();
    let (jarque_bera, jarque_bera_p) = jarque_bera(x);
    Ok(DiagnosticsReport {
        acf,
        significant_displacements,
        jarque_bera,
        jarque_bera_p,
    })
}

/// One expanding-window estimate.
#[derive(Debug, Clone)]
pub struct RecursiveStep {
    pub end: YearMonth,
    pub p: usize,
    pub fit: FitResult,
}

/// Re-identifies and re-estimates the MAR on every prefix of length
/// `initial_window..=T`: order `p` by BIC, then the `(r, s)` split by
/// likelihood.
pub fn recursive_estimates(
    series: &TimeSeries,
    initial_window: usize,
    p_max: usize,
    n_starts: usize,
) -> Result<Vec<RecursiveStep>> {
    if series.len() < initial_window || initial_window == 0 {
        return Err(Error::InsufficientData(format!(
            "initial window {initial_window} exceeds the series length {}",
            series.len()
        )));
    }
    (initial_window..=series.len())
        .map(|len| {
            let prefix = series.prefix(len)?;
            let p = fit_pseudo_causal(&prefix, p_max)?.p;
            let fit = select_mar(&prefix, p, n_starts)?.best;
            Ok(RecursiveStep {
                end: prefix.end(),
                p,
                fit,
            })
        })
        .collect()
}
