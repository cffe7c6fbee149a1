//! Least squares on column-major designs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition number above which a design is rejected as collinear.
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
}

fn design(columns: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i])
}

/// Ratio of the largest to the smallest singular value.
pub fn condition_number(columns: &[Vec<f64>]) -> f64 {
    if columns.is_empty() {
        return 1.0;
    }
    let n = columns[0].len();
    let sv = design(columns, n).singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Ordinary least squares of `y` on `columns` (no implicit intercept).
/// An empty column set returns the zero model.
pub fn ols(columns: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let n = y.len();
    let k = columns.len();
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArgument("design/response length mismatch".into()));
    }
    if k == 0 {
        let rss = y.iter().map(|v| v * v).sum();
        return Ok(OlsFit {
            coefficients: Vec::new(),
            std_errors: Vec::new(),
            residuals: y.to_vec(),
            rss,
        });
    }
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {k} regressors"
        )));
    }
    let cond = condition_number(columns);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Collinear { condition: cond });
    }
    let x = design(columns, n);
    let yv = DVector::from_column_slice(y);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &yv;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or(Error::Collinear { condition: cond })?;
    let beta = chol.solve(&xty);
    let resid = &yv - &x * &beta;
    let rss = resid.norm_squared();
    let s2 = rss / (n - k) as f64;
    let inv = chol.inverse();
    let std_errors = (0..k).map(|j| (s2 * inv[(j, j)]).sqrt()).collect();
    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        residuals: resid.iter().copied().collect(),
        rss,
    })
}

/// Minimum-norm least squares; tolerates rank deficiency such as all-zero
/// regressors (their coefficients come out as 0).
pub fn lstsq(columns: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    if columns.is_empty() {
        return Ok(Vec::new());
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArgument("design/response length mismatch".into()));
    }
    let x = design(columns, n);
    let svd = x.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let sol = svd
        .solve(&DVector::from_column_slice(y), eps)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}
