use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::model::{AnyModel, MarModel, SeasonalTerm};
use super::polynomial::is_stationary_coeffs;

/// `y_t = sum_j weights[j] eps_{t-j}` for `j` in `-truncation..=truncation`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedMaWeights {
    weights: Vec<f64>,
    truncation: usize,
}

impl TwoSidedMaWeights {
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Weight on `eps_{t-j}`; zero beyond the truncation.
    pub fn weight(&self, j: i64) -> f64 {
        let b = self.truncation as i64;
        if j.abs() > b {
            0.0
        } else {
            self.weights[(j + b) as usize]
        }
    }

    /// All weights from `j = -B` up to `j = B`.
    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
}

/// Power series of `1 / (1 - c_1 z - ... - c_k z^k)` up to `len` terms.
fn inverse_series(coeffs: &[f64], len: usize) -> Vec<f64> {
    let mut a = vec![0.0; len];
    if len > 0 {
        a[0] = 1.0;
    }
    for j in 1..len {
        a[j] = coeffs
            .iter()
            .enumerate()
            .filter(|(k, _)| *k < j)
            .map(|(k, c)| c * a[j - k - 1])
            .sum();
    }
    a
}

/// Two-sided moving-average weights, truncated where every omitted weight is
/// below `tolerance` in absolute value.
pub fn invert_to_ma(model: &MarModel, tolerance: f64) -> Result<TwoSidedMaWeights> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if !is_stationary_coeffs(model.lag_coeffs()) || !is_stationary_coeffs(model.lead_coeffs()) {
        return Err(Error::NonStationary("cannot invert a non-stationary model".into()));
    }
    let slowest = model
        .lag()
        .root_moduli()
        .into_iter()
        .chain(model.lead().root_moduli())
        .map(|m| 1.0 / m)
        .fold(0.0, f64::max);
    let order = (model.r() + model.s()) as f64;
    // Long enough that the one-sided tails are far below the tolerance.
    let mut len = 16usize;
    while len < 1 << 20 {
        let tail = slowest.powi(len as i32) * (len as f64).powf(order);
        if tail < tolerance * 1e-6 {
            break;
        }
        len *= 2;
    }
    let a = inverse_series(model.lag_coeffs(), len);
    let b = inverse_series(model.lead_coeffs(), len);
    // y_t = sum_i a_i eps_{t-i} convolved with sum_k b_k eps_{t+k}: the weight
    // on eps_{t-j} collects a_i b_k with i - k = j.
    let full = len as i64 - 1;
    let w = |j: i64| -> f64 {
        (0..len as i64)
            .filter_map(|i| {
                let k = i - j;
                (0..len as i64).contains(&k).then(|| a[i as usize] * b[k as usize])
            })
            .sum()
    };
    let all: Vec<f64> = (-full..=full).map(w).collect();
    let mut trunc = 0usize;
    for (idx, v) in all.iter().enumerate() {
        if v.abs() >= tolerance {
            trunc = trunc.max((idx as i64 - full).unsigned_abs() as usize);
        }
    }
    let weights = (-(trunc as i64)..=trunc as i64)
        .map(|j| all[(j + full) as usize])
        .collect();
    Ok(TwoSidedMaWeights {
        weights,
        truncation: trunc,
    })
}

/// `y_t = sum_d weights[d] y_{t+d} + error_factor * eps_t`, with `d < 0`
/// for lags and `d > 0` for leads.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveExpansion {
    pub weights: BTreeMap<i64, f64>,
    pub error_factor: f64,
}

impl AdditiveExpansion {
    pub fn weight(&self, displacement: i64) -> f64 {
        self.weights.get(&displacement).copied().unwrap_or(0.0)
    }
}

/// Multiplies operator polynomials stored as `{displacement: coefficient}`,
/// where displacement `d` stands for `y_{t+d}`.
fn multiply(a: &BTreeMap<i64, f64>, b: &BTreeMap<i64, f64>) -> BTreeMap<i64, f64> {
    let mut out = BTreeMap::new();
    for (da, ca) in a {
        for (db, cb) in b {
            *out.entry(da + db).or_insert(0.0) += ca * cb;
        }
    }
    out
}

fn factor(displacement: i64, coeff: f64) -> BTreeMap<i64, f64> {
    BTreeMap::from([(0, 1.0), (displacement, -coeff)])
}

/// Additive form of a MAR(r, s) with `r, s <= 1`, optionally with seasonal
/// factors: multiplies out the operator and solves for `y_t`.
pub fn expand_additive(model: &AnyModel) -> Result<AdditiveExpansion> {
    let base = model.base();
    if base.r() > 1 || base.s() > 1 {
        return Err(Error::Unsupported(format!(
            "additive expansion is implemented for r, s <= 1, got MAR({},{})",
            base.r(),
            base.s()
        )));
    }
    let (sl, sd) = match model {
        AnyModel::Smar(m) => (m.seasonal_lag(), m.seasonal_lead()),
        AnyModel::Mar(_) => (SeasonalTerm::none(), SeasonalTerm::none()),
        AnyModel::Marx(_) => {
            return Err(Error::Unsupported(
                "additive expansion of MARX models is not implemented".into(),
            ))
        }
    };
    let mut poly = BTreeMap::from([(0, 1.0)]);
    if let Some(phi) = base.lag_coeffs().first() {
        poly = multiply(&poly, &factor(-1, *phi));
    }
    if let Some(psi) = base.lead_coeffs().first() {
        poly = multiply(&poly, &factor(1, *psi));
    }
    if sd.is_present() {
        poly = multiply(&poly, &factor(sd.displacement as i64, sd.coeff));
    }
    if sl.is_present() {
        poly = multiply(&poly, &factor(-(sl.displacement as i64), sl.coeff));
    }
    let c0 = poly.remove(&0).unwrap_or(0.0);
    if c0.abs() < 1e-12 {
        return Err(Error::Domain("operator has no weight on y_t".into()));
    }
    let weights = poly
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(d, c)| (d, -c / c0))
        .collect();
    Ok(AdditiveExpansion {
        weights,
        error_factor: 1.0 / c0,
    })
}
