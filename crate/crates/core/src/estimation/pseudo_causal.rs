use crate::error::{Error, Result};
use crate::linalg::{ols, OlsFit};
use crate::timeseries::{ExogenousPanel, TimeSeries};

/// Yule-Walker AR(p) via Levinson-Durbin on uncentred sample moments.
/// Returns `(coefficients, innovation variance)`; the fit is always
/// stationary and is the same for the series and its time reversal.
pub fn yule_walker(y: &[f64], p: usize) -> (Vec<f64>, f64) {
    let n = y.len() as f64;
    let gamma: Vec<f64> = (0..=p)
        .map(|k| y.iter().zip(&y[k.min(y.len())..]).map(|(a, b)| a * b).sum::<f64>() / n)
        .collect();
    let mut a: Vec<f64> = Vec::with_capacity(p);
    let mut v = gamma[0];
    for k in 1..=p {
        if v <= 0.0 {
            a.resize(p, 0.0);
            break;
        }
        let acc = gamma[k] - a.iter().enumerate().map(|(j, c)| c * gamma[k - j - 1]).sum::<f64>();
        let refl = acc / v;
        let prev = a.clone();
        for j in 0..a.len() {
            a[j] = prev[j] - refl * prev[k - j - 2];
        }
        a.push(refl);
        v *= 1.0 - refl * refl;
    }
    (a, v.max(0.0))
}

/// Lagged design for an AR(p) on `t` in `[start, n)`.
fn lag_columns(y: &[f64], p: usize, start: usize) -> Vec<Vec<f64>> {
    (1..=p).map(|k| y[start - k..y.len() - k].to_vec()).collect()
}

fn ls_bic(rss: f64, n: usize, k: usize) -> f64 {
    let n = n as f64;
    n * (rss / n).ln() + k as f64 * n.ln()
}

#[derive(Debug, Clone)]
pub struct PseudoCausalFit {
    pub p: usize,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub residual_sd: f64,
    /// BIC of every candidate order `0..=p_max`.
    pub bic: Vec<f64>,
    pub n_effective: usize,
}

/// Least-squares AR(p) for `p = 0..=p_max` on the common sample
/// `t >= p_max`; the order minimizing BIC wins.
pub fn fit_pseudo_causal(series: &TimeSeries, p_max: usize) -> Result<PseudoCausalFit> {
    let y = series.values();
    if y.len() <= p_max + 10 {
        return Err(Error::InsufficientData(format!(
            "order selection up to {p_max} needs more than {} observations, got {}",
            p_max + 10,
            y.len()
        )));
    }
    let target = &y[p_max..];
    let n = target.len();
    let mut fits: Vec<OlsFit> = Vec::with_capacity(p_max + 1);
    let mut bic = Vec::with_capacity(p_max + 1);
    for p in 0..=p_max {
        let fit = ols(&lag_columns(y, p, p_max), target)?;
        bic.push(ls_bic(fit.rss, n, p));
        fits.push(fit);
    }
    let p = (0..=p_max).min_by(|a, b| bic[*a].total_cmp(&bic[*b])).unwrap_or(0);
    let fit = fits.swap_remove(p);
    Ok(PseudoCausalFit {
        p,
        residual_sd: (fit.rss / n as f64).sqrt(),
        coefficients: fit.coefficients,
        std_errors: fit.std_errors,
        bic,
        n_effective: n,
    })
}

#[derive(Debug, Clone)]
pub struct ArdlFit {
    /// Autoregressive order.
    pub p: usize,
    /// Distributed-lag order of each regressor (0 means contemporaneous only).
    pub x_lags: Vec<usize>,
    /// Names matching `coefficients`: `y(-1)..y(-p)`, then `name(-l)`.
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    pub bic: f64,
    pub n_effective: usize,
}

/// ARDL order selection by least-squares BIC over `p <= max_lag_y` and each
/// regressor lag order `<= max_lag_x`, on the common sample
/// `t >= max(max_lag_y, max_lag_x)`. Regressor columns that are identically
/// zero carry no information: they are left out of the regression, reported
/// with a zero coefficient, and still counted as parameters.
pub fn fit_ardl(
    series: &TimeSeries,
    x: &ExogenousPanel,
    max_lag_y: usize,
    max_lag_x: usize,
) -> Result<ArdlFit> {
    let xcols = crate::process::filter::exog_columns(series, x)?;
    let y = series.values();
    let start = max_lag_y.max(max_lag_x);
    let q = x.q();
    if y.len() <= start + 10 + max_lag_y + q * (max_lag_x + 1) {
        return Err(Error::InsufficientData(format!(
            "ARDL search needs more observations than {}",
            y.len()
        )));
    }
    let target = &y[start..];
    let n = target.len();

    let mut best: Option<ArdlFit> = None;
    let combos = (max_lag_x + 1).pow(q as u32);
    for p in 0..=max_lag_y {
        for code in 0..combos {
            let mut x_lags = Vec::with_capacity(q);
            let mut c = code;
            for _ in 0..q {
                x_lags.push(c % (max_lag_x + 1));
                c /= max_lag_x + 1;
            }
            let mut columns = lag_columns(y, p, start);
            let mut terms: Vec<String> = (1..=p).map(|k| format!("y(-{k})")).collect();
            for (j, l) in x_lags.iter().enumerate() {
                for lag in 0..=*l {
                    columns.push(xcols[j][start - lag..y.len() - lag].to_vec());
                    terms.push(format!("{}(-{lag})", x.names()[j]));
                }
            }
            let k = columns.len();
            let keep: Vec<usize> = (0..k).filter(|i| columns[*i].iter().any(|v| *v != 0.0)).collect();
            let kept: Vec<Vec<f64>> = keep.iter().map(|i| columns[*i].clone()).collect();
            let fit = ols(&kept, target)?;
            let mut coefficients = vec![0.0; k];
            let mut std_errors = vec![0.0; k];
            for (slot, i) in keep.iter().enumerate() {
                coefficients[*i] = fit.coefficients[slot];
                std_errors[*i] = fit.std_errors[slot];
            }
            let bic = ls_bic(fit.rss, n, k);
            if best.as_ref().is_none_or(|b| bic < b.bic) {
                best = Some(ArdlFit {
                    p,
                    x_lags,
                    terms,
                    coefficients,
                    std_errors,
                    residuals: fit.residuals,
                    bic,
                    n_effective: n,
                });
            }
        }
    }
    best.ok_or_else(|| Error::InsufficientData("no ARDL candidate".into()))
}
