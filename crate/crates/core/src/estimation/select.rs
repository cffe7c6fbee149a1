use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::process::filter::exog_columns;
use crate::process::AnyModel;
use crate::timeseries::{Dated, ExogenousPanel, TimeSeries};

use super::amle::{fit_amle, theta_of, AmleOptions, FitResult, ModelShape, Objective};

/// A winning fit together with every candidate that was compared.
#[derive(Debug, Clone)]
pub struct Selection {
    pub best: FitResult,
    pub candidates: Vec<FitResult>,
}

/// Index of the highest log likelihood; ties go to the later candidate.
fn argmax_loglik(fits: &[FitResult]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, f) in fits.iter().enumerate() {
        if best.is_none_or(|b| f.loglik >= fits[b].loglik) {
            best = Some(i);
        }
    }
    best
}

fn collect_fits(results: Vec<Result<FitResult>>) -> Result<Vec<FitResult>> {
    let mut fits = Vec::with_capacity(results.len());
    let mut last_err = None;
    for r in results {
        match r {
            Ok(f) => fits.push(f),
            Err(e) => last_err = Some(e),
        }
    }
    if fits.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::InvalidArgument("no candidates".into())));
    }
    Ok(fits)
}

/// Compares every MAR(r, p - r) on the fixed window `[p, T - p)`, then
/// refits the winner on all of its computable residuals. Ties favour the
/// larger `r`. `candidates` holds the `p + 1` common-window fits in order of
/// increasing `r`.
pub fn select_mar(series: &TimeSeries, p: usize, n_starts: usize) -> Result<Selection> {
    let n = series.len();
    if n <= 2 * p + 10 {
        return Err(Error::InsufficientData(format!(
            "selecting among MAR(r, {p} - r) needs more than {} observations, got {n}",
            2 * p + 10
        )));
    }
    let window = Some((p, n - p));
    let results: Vec<Result<FitResult>> = (0..=p)
        .into_par_iter()
        .map(|r| {
            fit_amle(
                series,
                ModelShape::mar(r, p - r),
                None,
                &AmleOptions {
                    n_starts,
                    window,
                    std_errors: false,
                    ..Default::default()
                },
            )
        })
        .collect();
    let candidates = if results.iter().all(|r| r.is_ok()) {
        results.into_iter().map(|r| r.unwrap()).collect::<Vec<_>>()
    } else {
        collect_fits(results)?
    };
    let winner = &candidates[argmax_loglik(&candidates).expect("nonempty")];
    let best = fit_amle(
        series,
        winner.shape(),
        None,
        &AmleOptions {
            n_starts: 0,
            extra_starts: vec![winner.theta()],
            ..Default::default()
        },
    )?;
    let best = FitResult {
        n_starts_used: winner.n_starts_used + best.n_starts_used,
        ..best
    };
    Ok(Selection { best, candidates })
}

/// Seasonal extension of a MAR fit. With only `d1`, compares a seasonal lag
/// at `d1` against a seasonal lead at `d1`; with `d2` as well, compares
/// `(lag d1, lead d2)` against `(lag d2, lead d1)`. All parameters are
/// re-estimated, starting from the MAR estimates with seasonal coefficients
/// at 0 (then at +-0.3).
pub fn fit_smar(
    series: &TimeSeries,
    base: &FitResult,
    d1: usize,
    d2: Option<usize>,
    n_starts: usize,
) -> Result<Selection> {
    let AnyModel::Mar(_) = &base.model else {
        return Err(Error::InvalidArgument("the base fit for a SMAR must be a plain MAR".into()));
    };
    if d1 == 0 || d2 == Some(0) {
        return Err(Error::InvalidArgument("seasonal displacements must be >= 1".into()));
    }
    let d2v = d2.unwrap_or(0);
    let b = base.model.base();
    let shapes = [(d1, d2v), (d2v, d1)].map(|(lag, lead)| ModelShape {
        r: b.r(),
        s: b.s(),
        seasonal_lag: lag,
        seasonal_lead: lead,
        offsets: Vec::new(),
    });
    let base_theta = theta_of(&base.model);
    let results: Vec<Result<FitResult>> = shapes
        .par_iter()
        .map(|shape| {
            let k = shape.r + shape.s;
            let n_seasonal = (shape.seasonal_lag > 0) as usize + (shape.seasonal_lead > 0) as usize;
            let mut starts = Vec::new();
            for init in [0.0, 0.3, -0.3] {
                let mut theta = base_theta[..k].to_vec();
                theta.extend(std::iter::repeat_n(init, n_seasonal));
                theta.extend_from_slice(&base_theta[k..]);
                starts.push(theta);
            }
            starts.truncate(n_starts.max(1));
            fit_amle(
                series,
                shape.clone(),
                None,
                &AmleOptions {
                    n_starts: 0,
                    extra_starts: starts,
                    ..Default::default()
                },
            )
        })
        .collect();
    let candidates = collect_fits(results)?;
    let best = candidates[argmax_loglik(&candidates).expect("nonempty")].clone();
    Ok(Selection { best, candidates })
}

/// Every combination of regressor offsets in `{-1, 0, 1}`, in lexicographic
/// order.
pub fn offset_combinations(q: usize) -> Vec<Vec<i64>> {
    (0..3usize.pow(q as u32))
        .map(|mut code| {
            (0..q)
                .map(|_| {
                    let o = (code % 3) as i64 - 1;
                    code /= 3;
                    o
                })
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect()
        })
        .collect()
}

/// Common likelihood window for MARX(r, s, q) comparisons.
pub fn marx_window(n: usize, r: usize, s: usize) -> (usize, usize) {
    (r.max(1), n - s.max(1))
}

/// Fits a MARX(r, s, q) for all `3^q` offset combinations on one common
/// window and keeps the highest likelihood. Each candidate starts from the
/// MAR(r, s) estimate on that window with zero loadings, and with loadings
/// from regressing its residuals on the offset regressors.
pub fn select_marx_offsets(
    series: &TimeSeries,
    x: &ExogenousPanel,
    r: usize,
    s: usize,
    n_starts: usize,
) -> Result<Selection> {
    let n = series.len();
    if n <= r.max(1) + s.max(1) + 10 {
        return Err(Error::InsufficientData(format!("MARX estimation needs more than {n} observations")));
    }
    let window = marx_window(n, r, s);
    let mar = fit_amle(
        series,
        ModelShape::mar(r, s),
        None,
        &AmleOptions {
            n_starts,
            window: Some(window),
            std_errors: false,
            ..Default::default()
        },
    )?;
    let fits = marx_candidates(series, x, &mar, offset_combinations(x.q()), window)?;
    let best = fits[argmax_loglik(&fits).expect("nonempty")].clone();
    Ok(Selection { best, candidates: fits })
}

/// MARX fits for the given offset combinations, warm-started from a MAR fit.
pub fn marx_candidates(
    series: &TimeSeries,
    x: &ExogenousPanel,
    mar: &FitResult,
    combos: Vec<Vec<i64>>,
    window: (usize, usize),
) -> Result<Vec<FitResult>> {
    let mar_theta = mar.theta();
    let k = mar.model.base().r() + mar.model.base().s();
    let mar_resid = Objective::new(series, ModelShape::of(&mar.model), None, Some(window))?
        .residuals(&mar_theta)
        .ok_or_else(|| Error::NonStationary("MAR start is not stationary".into()))?;
    let columns = exog_columns(series, x)?;
    let results: Vec<Result<FitResult>> = combos
        .par_iter()
        .map(|offsets| {
            let design: Vec<Vec<f64>> = offsets
                .iter()
                .zip(&columns)
                .map(|(o, c)| (window.0..window.1).map(|t| c[(t as i64 + o) as usize]).collect())
                .collect();
            let beta0 = lstsq(&design, &mar_resid)?;
            let with_beta = |beta: &[f64]| {
                let mut t = mar_theta[..k].to_vec();
                t.extend_from_slice(beta);
                t.extend_from_slice(&mar_theta[k..]);
                t
            };
            let shape = ModelShape {
                offsets: offsets.clone(),
                ..ModelShape::mar(mar.model.base().r(), mar.model.base().s())
            };
            fit_amle(
                series,
                shape,
                Some(x),
                &AmleOptions {
                    n_starts: 0,
                    window: Some(window),
                    extra_starts: vec![with_beta(&vec![0.0; offsets.len()]), with_beta(&beta0)],
                    ..Default::default()
                },
            )
        })
        .collect();
    collect_fits(results)
}
