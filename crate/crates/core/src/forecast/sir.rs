use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::ols;
use crate::process::{residuals, AnyModel};
use crate::rng::Streams;
use crate::student_t::{normal_ln_pdf, TDensity};
use crate::timeseries::{BoundsSeries, Dated, ExogenousPanel, TimeSeries, YearMonth};

use super::gj::{GjContext, SampleMarginal};
use super::lls::{check_ess, normalize_log_weights};
use super::paths::{probability_in_bounds, ForecastPaths, Method, ProbabilityForecast, Settings};

/// Gaussian AR(1) proposal for the noncausal component,
/// `u_t = rho u_{t-1} + eta' X_t + e_t`, `e_t ~ N(0, sigma2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentalModel {
    pub rho: f64,
    pub sigma2: f64,
    pub eta: Option<Vec<f64>>,
}

impl InstrumentalModel {
    pub fn new(rho: f64, sigma2: f64, eta: Option<Vec<f64>>) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::Domain(format!("instrumental |rho| = {} must be below one", rho.abs())));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Domain(format!("instrumental variance {sigma2} must be positive")));
        }
        Ok(Self { rho, sigma2, eta })
    }
}

/// What the importance weights target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImportanceTarget {
    /// The sample-based predictive density of the noncausal component.
    #[default]
    SampleBased,
    /// The instrumental density itself, so every weight is one.
    Instrumental,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirSettings {
    pub k: usize,
    pub s: usize,
    pub seed: u64,
    pub target: ImportanceTarget,
}

impl SirSettings {
    pub fn new(k: usize, s: usize, seed: u64) -> Self {
        Self {
            k,
            s,
            seed,
            target: ImportanceTarget::SampleBased,
        }
    }

    fn echo(&self) -> Settings {
        Settings {
            draws: self.k,
            truncation: None,
            resample: Some(self.s),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SirForecast {
    /// The `s` resampled trajectories.
    pub paths: ForecastPaths,
    /// All `k` proposal trajectories with their normalized importance weights.
    pub weighted: ForecastPaths,
    pub ess: f64,
    pub instrumental: InstrumentalModel,
    pub settings: SirSettings,
}

impl SirForecast {
    /// Probability in bounds from the weighted proposal set. Resampling adds
    /// noise without changing the expectation, so this is the sharper estimate.
    pub fn probability(&self, bounds: &BoundsSeries) -> Result<ProbabilityForecast> {
        self.with_ess(probability_in_bounds(&self.weighted, bounds, Method::Sir, self.settings.echo()))
    }

    /// Probability in bounds counted over the resampled trajectories.
    pub fn resampled_probability(&self, bounds: &BoundsSeries) -> Result<ProbabilityForecast> {
        self.with_ess(probability_in_bounds(&self.paths, bounds, Method::Sir, self.settings.echo()))
    }

    fn with_ess(&self, f: Result<ProbabilityForecast>) -> Result<ProbabilityForecast> {
        f.map(|mut f| {
            f.ess = Some(self.ess);
            f
        })
    }
}

/// Systematic resampling: `s` indices drawn from normalized `weights` using
/// one uniform offset.
pub fn systematic_resample<R: Rng + ?Sized>(weights: &[f64], s: usize, rng: &mut R) -> Vec<usize> {
    let offset: f64 = rng.random::<f64>() / s as f64;
    let mut out = Vec::with_capacity(s);
    let mut cumulative = weights[0];
    let mut i = 0;
    for j in 0..s {
        let point = offset + j as f64 / s as f64;
        while point > cumulative && i + 1 < weights.len() {
            i += 1;
            cumulative += weights[i];
        }
        out.push(i);
    }
    out
}

struct Engine<'a> {
    origin: YearMonth,
    phi: f64,
    psi: f64,
    g: TDensity,
    y_t: f64,
    u_t: f64,
    marginal: &'a SampleMarginal,
    /// Exogenous shift in the target link `k` (for `eps_{T+k-1}`).
    link_shift: Vec<f64>,
    /// Exogenous mean shift of the proposal at step `k`.
    proposal_shift: Vec<f64>,
    instrumental: InstrumentalModel,
}

impl Engine<'_> {
    fn run(self, h: usize, settings: &SirSettings) -> Result<SirForecast> {
        let (k, s) = (settings.k, settings.s);
        if h == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if s == 0 || k < s {
            return Err(Error::InvalidArgument(format!("need K >= S >= 1, got K = {k}, S = {s}")));
        }
        let streams = Streams::new(settings.seed, "sir");
        let sd = self.instrumental.sigma2.sqrt();
        let rho = self.instrumental.rho;
        let draws: Vec<(Vec<f64>, f64)> = (0..k as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = streams.stream(i);
                let mut u = Vec::with_capacity(h);
                let mut prev = self.u_t;
                let mut ln_proposal = 0.0;
                for step in 0..h {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let next = rho * prev + self.proposal_shift[step] + sd * z;
                    ln_proposal += normal_ln_pdf(sd * z, self.instrumental.sigma2);
                    u.push(next);
                    prev = next;
                }
                let ln_w = match settings.target {
                    ImportanceTarget::Instrumental => 0.0,
                    ImportanceTarget::SampleBased => {
                        let mut prev = self.u_t;
                        let mut ln_target = 0.0;
                        for (step, &v) in u.iter().enumerate() {
                            ln_target += self.g.ln_pdf(prev - self.psi * v - self.link_shift[step]);
                            prev = v;
                        }
                        ln_target + self.marginal.ln_sum(prev) - ln_proposal
                    }
                };
                (u, ln_w)
            })
            .collect();
        let ln_w: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let (weights, ess) = normalize_log_weights(&ln_w).ok_or(Error::DegenerateImportance { ess: 0.0, n: k })?;
        check_ess(ess, k)?;

        let to_levels = |u: &[f64]| {
            let mut prev = self.y_t;
            u.iter()
                .map(|v| {
                    prev = self.phi * prev + v;
                    prev
                })
                .collect::<Vec<f64>>()
        };
        let levels: Vec<Vec<f64>> = draws.iter().map(|(u, _)| to_levels(u)).collect();
        let mut rng = Streams::new(settings.seed, "sir-resample").stream(0);
        let picked = systematic_resample(&weights, s, &mut rng);
        let resampled = picked.iter().map(|&i| levels[i].clone()).collect();
        Ok(SirForecast {
            paths: ForecastPaths::new(self.origin, resampled, None)?,
            weighted: ForecastPaths::new(self.origin, levels, Some(weights))?,
            ess,
            instrumental: self.instrumental,
            settings: *settings,
        })
    }
}

fn residual_variance(series: &TimeSeries, model: &AnyModel, x: Option<&ExogenousPanel>) -> Result<f64> {
    let e = residuals(series, model, x)?;
    let e = e.values();
    Ok(e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64)
}

/// Gaussian AR(1) fitted by least squares to the noncausal component `u`
/// of a MAR(1,1), with the model's residual variance.
pub fn fit_instrumental(model: &AnyModel, series: &TimeSeries) -> Result<InstrumentalModel> {
    let ctx = GjContext::new(model, series)?;
    let u = &ctx.u;
    let fit = ols(&[u[..u.len() - 1].to_vec()], &u[1..])?;
    InstrumentalModel::new(fit.coefficients[0], residual_variance(series, model, None)?, None)
}

/// SIR predictive paths for a MAR(1,1).
pub fn sir_forecast(model: &AnyModel, series: &TimeSeries, h: usize, settings: &SirSettings) -> Result<SirForecast> {
    let ctx = GjContext::new(model, series)?;
    let instrumental = fit_instrumental(model, series)?;
    Engine {
        origin: series.end(),
        phi: ctx.phi,
        psi: ctx.psi,
        g: ctx.g,
        y_t: ctx.y_t,
        u_t: ctx.u_t(),
        marginal: &ctx.marginal,
        link_shift: vec![0.0; h],
        proposal_shift: vec![0.0; h],
        instrumental,
    }
    .run(h, settings)
}

/// Regressor rows by date: history up to the origin, forecasts after it.
struct RowLookup<'a> {
    origin: YearMonth,
    history: &'a ExogenousPanel,
    future: &'a ExogenousPanel,
}

impl RowLookup<'_> {
    fn row(&self, date: YearMonth) -> Option<Vec<f64>> {
        let panel = if date > self.origin { self.future } else { self.history };
        let i = panel.index_of(date)?;
        Some(panel.columns().iter().map(|c| c[i]).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// SIR predictive paths for a MARX with a MAR(1,1) base.
///
/// `x` holds the regressors over the sample, `x_future` their forecasts for
/// at least the `h` months after the last observation. `vintage`, when
/// given, overwrites the matching rows of `x` before anything is filtered.
pub fn marx_sir_forecast(
    model: &AnyModel,
    series: &TimeSeries,
    x: &ExogenousPanel,
    x_future: &ExogenousPanel,
    vintage: Option<&ExogenousPanel>,
    h: usize,
    settings: &SirSettings,
) -> Result<SirForecast> {
    let AnyModel::Marx(marx) = model else {
        return Err(Error::InvalidArgument(format!("expected a MARX model, got a {} model", model.kind())));
    };
    let base = AnyModel::Mar(marx.base().clone());
    let ctx = GjContext::new(&base, series)?;
    if x.q() != marx.q() || x_future.q() != marx.q() {
        return Err(Error::InvalidArgument(format!(
            "model has {} regressors but the panels have {} and {}",
            marx.q(),
            x.q(),
            x_future.q()
        )));
    }
    let history = match vintage {
        Some(v) => x.with_replacements(v)?,
        None => x.clone(),
    };
    let origin = series.end();
    let lookup = RowLookup {
        origin,
        history: &history,
        future: x_future,
    };
    for step in 1..=h {
        let date = origin.add_months(step as i64);
        if lookup.row(date).is_none() {
            return Err(Error::Alignment(format!("regressor forecasts do not cover {date}")));
        }
    }
    let (beta, offsets) = (marx.beta(), marx.offsets());
    let shift_at = |date: YearMonth| -> Option<f64> {
        let mut acc = 0.0;
        for (k, (b, o)) in beta.iter().zip(offsets).enumerate() {
            acc += b * lookup.row(date.add_months(*o))?[k];
        }
        Some(acc)
    };

    // u_t = y_t - phi y_{t-1}; u[j] is dated series.date(j + 1).
    let u = &ctx.u;
    let u_date = |j: usize| series.date(j + 1);
    let mut points = Vec::new();
    for j in 0..u.len() - 1 {
        if let Some(shift) = shift_at(u_date(j)) {
            points.push(ctx.psi * u[j + 1] + shift);
        }
    }
    let marginal = SampleMarginal::new(ctx.g, points)?;
    let link_shift = (1..=h)
        .map(|step| {
            let date = origin.add_months(step as i64 - 1);
            shift_at(date).ok_or_else(|| Error::Alignment(format!("regressors do not cover the offsets around {date}")))
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut target = Vec::new();
    let mut columns = vec![Vec::new(); 1 + marx.q()];
    for j in 1..u.len() {
        let Some(row) = lookup.row(u_date(j)) else { continue };
        target.push(u[j]);
        columns[0].push(u[j - 1]);
        for (k, v) in row.iter().enumerate() {
            columns[k + 1].push(*v);
        }
    }
    if target.len() < columns.len() + 2 {
        return Err(Error::InsufficientData("too few rows for the instrumental regression".into()));
    }
    // All-zero regressors (for instance a switched-off panel) get a zero loading.
    let active: Vec<usize> = (0..columns.len()).filter(|&c| c == 0 || columns[c].iter().any(|v| *v != 0.0)).collect();
    let kept: Vec<Vec<f64>> = active.iter().map(|&c| columns[c].clone()).collect();
    let fit = ols(&kept, &target)?;
    let mut eta = vec![0.0; marx.q()];
    for (coef, &c) in fit.coefficients.iter().zip(&active).skip(1) {
        eta[c - 1] = *coef;
    }
    let instrumental = InstrumentalModel::new(fit.coefficients[0], residual_variance(series, model, Some(&history))?, Some(eta.clone()))?;
    let proposal_shift = (1..=h)
        .map(|step| dot(&eta, &lookup.row(origin.add_months(step as i64)).expect("checked above")))
        .collect();
    Engine {
        origin,
        phi: ctx.phi,
        psi: ctx.psi,
        g: ctx.g,
        y_t: ctx.y_t,
        u_t: ctx.u_t(),
        marginal: &marginal,
        link_shift,
        proposal_shift,
        instrumental,
    }
    .run(h, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{simulate, MarModel, MarxModel};
    use rand::SeedableRng;

    fn setup() -> (AnyModel, TimeSeries) {
        let m = AnyModel::Mar(MarModel::mar11(0.5, 0.7, 5.0, 1.0).unwrap());
        let s = simulate(&m, 250, 5, None, None, YearMonth::new(2000, 1).unwrap()).unwrap().series;
        (m, s)
    }

    #[test]
    fn systematic_resampling_counts() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let idx = systematic_resample(&[0.25, 0.5, 0.25], 4, &mut rng);
        assert_eq!(idx, vec![0, 1, 1, 2]);
        let idx = systematic_resample(&[1.0, 0.0], 3, &mut rng);
        assert_eq!(idx, vec![0, 0, 0]);
        let w = vec![0.2; 5];
        let idx = systematic_resample(&w, 5, &mut rng);
        assert_eq!(idx, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn deterministic_given_seed() {
        let (m, s) = setup();
        let set = SirSettings::new(2000, 200, 42);
        let a = sir_forecast(&m, &s, 3, &set).unwrap();
        let b = sir_forecast(&m, &s, 3, &set).unwrap();
        assert_eq!(a.paths, b.paths);
        assert_eq!(a.weighted, b.weighted);
        assert_eq!(a.paths.len(), 200);
        assert_eq!(a.paths.horizon(), 3);
        assert!(a.ess > 20.0);
    }

    #[test]
    fn paths_follow_causal_recursion() {
        let (m, s) = setup();
        let mut set = SirSettings::new(50, 50, 1);
        set.target = ImportanceTarget::Instrumental;
        let f = sir_forecast(&m, &s, 2, &set).unwrap();
        assert!((f.ess - 50.0).abs() < 1e-9);
        // Equal weights and K = S: systematic resampling keeps every path once.
        assert_eq!(f.paths.paths(), f.weighted.paths());
    }

    #[test]
    fn settings_checked() {
        let (m, s) = setup();
        assert!(sir_forecast(&m, &s, 1, &SirSettings::new(10, 20, 1)).is_err());
        assert!(sir_forecast(&m, &s, 0, &SirSettings::new(10, 5, 1)).is_err());
    }

    #[test]
    fn marx_needs_future_regressors() {
        let (_, s) = setup();
        let base = MarModel::mar11(0.5, 0.7, 5.0, 1.0).unwrap();
        let m = AnyModel::Marx(MarxModel::new(base, vec![0.0], vec![1]).unwrap());
        let x = ExogenousPanel::zeros(s.start(), vec!["x".into()], s.len()).unwrap();
        let short = ExogenousPanel::zeros(s.end().add_months(1), vec!["x".into()], 2).unwrap();
        let set = SirSettings::new(100, 10, 1);
        assert!(matches!(
            marx_sir_forecast(&m, &s, &x, &short, None, 3, &set),
            Err(Error::Alignment(_))
        ));
        assert!(marx_sir_forecast(&m, &s, &x, &short, None, 2, &set).is_ok());
    }
}
