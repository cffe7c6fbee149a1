use crate::error::{Error, Result};
use crate::timeseries::{Dated, ExogenousPanel, TimeSeries};

use super::model::{AnyModel, MarModel, SeasonalTerm};

/// Regressor contribution `beta * x[t + offset]`, with `x` on the same index
/// as the series being filtered.
#[derive(Debug, Clone, Copy)]
pub struct ExogTerm<'a> {
    pub beta: f64,
    pub offset: i64,
    pub column: &'a [f64],
}

/// Everything needed to turn `y` into residuals, borrowed as plain slices so
/// the likelihood can rebuild it cheaply for every parameter vector.
#[derive(Debug, Clone, Default)]
pub struct ResidualSpec<'a> {
    pub lag: &'a [f64],
    pub lead: &'a [f64],
    pub seasonal_lag: SeasonalTerm,
    pub seasonal_lead: SeasonalTerm,
    pub exog: Vec<ExogTerm<'a>>,
}

impl ResidualSpec<'_> {
    /// Points lost at the start and at the end of the sample.
    pub fn edge_loss(&self) -> (usize, usize) {
        let mut front = self.lag.len() + self.seasonal_lag.displacement;
        let mut back = self.lead.len() + self.seasonal_lead.displacement;
        for e in &self.exog {
            if e.offset < 0 {
                front = front.max(e.offset.unsigned_abs() as usize);
            } else {
                back = back.max(e.offset as usize);
            }
        }
        (front, back)
    }
}

/// `u_t = y_t - sum_k lag_k y_{t-k}` for `t` in `[r, n)`.
pub fn apply_lag(y: &[f64], lag: &[f64]) -> Vec<f64> {
    let r = lag.len();
    (r..y.len())
        .map(|t| y[t] - lag.iter().enumerate().map(|(k, c)| c * y[t - k - 1]).sum::<f64>())
        .collect()
}

/// `v_t = y_t - sum_k lead_k y_{t+k}` for `t` in `[0, n - s)`.
pub fn apply_lead(y: &[f64], lead: &[f64]) -> Vec<f64> {
    let s = lead.len();
    (0..y.len().saturating_sub(s))
        .map(|t| y[t] - lead.iter().enumerate().map(|(k, c)| c * y[t + k + 1]).sum::<f64>())
        .collect()
}

/// Residuals on raw values. Returns the index (into `y`) of the first
/// residual together with the residuals for every computable `t`.
pub fn raw_residuals(y: &[f64], spec: &ResidualSpec<'_>) -> (usize, Vec<f64>) {
    let (front, back) = spec.edge_loss();
    let n = y.len();
    if n <= front + back {
        return (front, Vec::new());
    }
    let r = spec.lag.len();
    // e[i] is defined at time r + i.
    let mut e = apply_lead(&apply_lag(y, spec.lag), spec.lead);
    let sd = spec.seasonal_lead;
    if sd.is_present() {
        let m = e.len().saturating_sub(sd.displacement);
        e = (0..m).map(|i| e[i] - sd.coeff * e[i + sd.displacement]).collect();
    }
    let mut first = r;
    let sl = spec.seasonal_lag;
    if sl.is_present() {
        e = (sl.displacement..e.len())
            .map(|i| e[i] - sl.coeff * e[i - sl.displacement])
            .collect();
        first += sl.displacement;
    }
    // Trim to the window where every regressor index exists.
    let skip = front - first;
    let last = n - back;
    let mut out: Vec<f64> = e.into_iter().skip(skip).take(last - front).collect();
    for term in &spec.exog {
        for (i, v) in out.iter_mut().enumerate() {
            let t = (front + i) as i64 + term.offset;
            *v -= term.beta * term.column[t as usize];
        }
    }
    (front, out)
}

/// Causal and noncausal components: `u = Phi(L) y` (dated from the `r`-th
/// observation) and `v = Psi(L^{-1}) y` (dated from the first).
pub fn filter_components(series: &TimeSeries, model: &MarModel) -> Result<(TimeSeries, TimeSeries)> {
    let (r, s) = (model.r(), model.s());
    if series.len() <= r + s {
        return Err(Error::InsufficientData(format!(
            "filtering a MAR({r},{s}) needs more than {} observations, got {}",
            r + s,
            series.len()
        )));
    }
    let u = apply_lag(series.values(), model.lag_coeffs());
    let v = apply_lead(series.values(), model.lead_coeffs());
    Ok((
        TimeSeries::new(format!("{}_u", series.name()), series.date(r), u)?,
        TimeSeries::new(format!("{}_v", series.name()), series.start(), v)?,
    ))
}

/// Regressor columns lined up with `series`, which the panel must cover.
pub fn exog_columns(series: &TimeSeries, x: &ExogenousPanel) -> Result<Vec<Vec<f64>>> {
    let (a, b) = (x.index_of(series.start()), x.index_of(series.end()));
    match (a, b) {
        (Some(a), Some(b)) => Ok(x.columns().iter().map(|c| c[a..=b].to_vec()).collect()),
        _ => Err(Error::Alignment(format!(
            "regressors span {}..{} but the series spans {}..{}",
            x.start(),
            x.end(),
            series.start(),
            series.end()
        ))),
    }
}

/// Fitted innovations for any model family.
pub fn residuals(series: &TimeSeries, model: &AnyModel, x: Option<&ExogenousPanel>) -> Result<TimeSeries> {
    let base = model.base();
    let columns;
    let mut spec = ResidualSpec {
        lag: base.lag_coeffs(),
        lead: base.lead_coeffs(),
        ..Default::default()
    };
    match model {
        AnyModel::Mar(_) => {}
        AnyModel::Smar(m) => {
            spec.seasonal_lag = m.seasonal_lag();
            spec.seasonal_lead = m.seasonal_lead();
        }
        AnyModel::Marx(m) => {
            let x = x.ok_or_else(|| {
                Error::InvalidArgument("a MARX model needs its regressor panel".into())
            })?;
            if x.q() != m.q() {
                return Err(Error::InvalidArgument(format!(
                    "model has {} regressors but the panel has {}",
                    m.q(),
                    x.q()
                )));
            }
            columns = exog_columns(series, x)?;
            spec.exog = m
                .beta()
                .iter()
                .zip(m.offsets())
                .zip(&columns)
                .map(|((b, o), c)| ExogTerm {
                    beta: *b,
                    offset: *o,
                    column: c,
                })
                .collect();
        }
    }
    let (front, back) = spec.edge_loss();
    if series.len() <= front + back {
        return Err(Error::InsufficientData(format!(
            "{} residuals lose {front} leading and {back} trailing points but the series has {}",
            model.kind(),
            series.len()
        )));
    }
    let (first, e) = raw_residuals(series.values(), &spec);
    TimeSeries::new(format!("{}_resid", series.name()), series.date(first), e)
}
