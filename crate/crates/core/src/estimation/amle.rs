use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::optim::{fd_gradient, fd_hessian, minimize, Options};
use crate::process::filter::{exog_columns, raw_residuals, ExogTerm, ResidualSpec};
use crate::process::polynomial::is_stationary_coeffs;
use crate::process::{AnyModel, MarModel, MarxModel, NoiseSpec, SeasonalTerm, SmarModel};
use crate::student_t::TDensity;
use crate::timeseries::{Dated, ExogenousPanel, TimeSeries, YearMonth};

use super::pseudo_causal::yule_walker;

/// Starting degrees of freedom.
pub const DOF_START: f64 = 4.0;

/// Shape of the model being estimated.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModelShape {
    pub r: usize,
    pub s: usize,
    /// Seasonal lag displacement, 0 when absent.
    pub seasonal_lag: usize,
    /// Seasonal lead displacement, 0 when absent.
    pub seasonal_lead: usize,
    /// One offset per regressor; empty for MAR/SMAR.
    pub offsets: Vec<i64>,
}

impl ModelShape {
    pub fn mar(r: usize, s: usize) -> Self {
        Self {
            r,
            s,
            ..Default::default()
        }
    }

    pub fn of(model: &AnyModel) -> Self {
        let b = model.base();
        let mut shape = Self::mar(b.r(), b.s());
        match model {
            AnyModel::Mar(_) => {}
            AnyModel::Smar(m) => {
                shape.seasonal_lag = m.seasonal_lag().displacement;
                shape.seasonal_lead = m.seasonal_lead().displacement;
            }
            AnyModel::Marx(m) => shape.offsets = m.offsets().to_vec(),
        }
        shape
    }

    fn n_seasonal(&self) -> usize {
        (self.seasonal_lag > 0) as usize + (self.seasonal_lead > 0) as usize
    }

    /// Length of the unconstrained parameter vector.
    pub fn dim(&self) -> usize {
        self.r + self.s + self.n_seasonal() + self.offsets.len() + 2
    }

    /// Names of the natural parameters, in the layout used by
    /// [`FitResult::params`] and [`FitResult::std_errors`].
    pub fn param_names(&self, regressors: Option<&[String]>) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.r).map(|k| format!("lag{k}")).collect();
        names.extend((1..=self.s).map(|k| format!("lead{k}")));
        if self.seasonal_lag > 0 {
            names.push(format!("seasonal_lag{}", self.seasonal_lag));
        }
        if self.seasonal_lead > 0 {
            names.push(format!("seasonal_lead{}", self.seasonal_lead));
        }
        for (k, o) in self.offsets.iter().enumerate() {
            let name = regressors.and_then(|r| r.get(k)).cloned().unwrap_or(format!("x{}", k + 1));
            names.push(format!("beta_{name}({o:+})"));
        }
        names.push("dof".into());
        names.push("scale".into());
        names
    }

    /// Points lost at the start and end of the sample.
    pub fn edge_loss(&self) -> (usize, usize) {
        let lag_off = self.offsets.iter().map(|o| (-o).max(0) as usize).max().unwrap_or(0);
        let lead_off = self.offsets.iter().map(|o| (*o).max(0) as usize).max().unwrap_or(0);
        (
            (self.r + self.seasonal_lag).max(lag_off),
            (self.s + self.seasonal_lead).max(lead_off),
        )
    }

    fn build(&self, theta: &[f64]) -> Result<AnyModel> {
        let p = Params::split(self, theta);
        let base = MarModel::new(p.lag.to_vec(), p.lead.to_vec(), NoiseSpec::new(p.dof, p.scale)?)?;
        if !self.offsets.is_empty() {
            return Ok(AnyModel::Marx(MarxModel::new(base, p.beta.to_vec(), self.offsets.clone())?));
        }
        if self.n_seasonal() > 0 {
            return Ok(AnyModel::Smar(SmarModel::new(
                base,
                SeasonalTerm::new(p.seasonal_lag, self.seasonal_lag)?,
                SeasonalTerm::new(p.seasonal_lead, self.seasonal_lead)?,
            )?));
        }
        Ok(AnyModel::Mar(base))
    }
}

struct Params<'a> {
    lag: &'a [f64],
    lead: &'a [f64],
    seasonal_lag: f64,
    seasonal_lead: f64,
    beta: &'a [f64],
    dof: f64,
    scale: f64,
}

impl<'a> Params<'a> {
    fn split(shape: &ModelShape, theta: &'a [f64]) -> Self {
        let (lag, rest) = theta.split_at(shape.r);
        let (lead, mut rest) = rest.split_at(shape.s);
        let mut seasonal_lag = 0.0;
        let mut seasonal_lead = 0.0;
        if shape.seasonal_lag > 0 {
            seasonal_lag = rest[0];
            rest = &rest[1..];
        }
        if shape.seasonal_lead > 0 {
            seasonal_lead = rest[0];
            rest = &rest[1..];
        }
        let (beta, rest) = rest.split_at(shape.offsets.len());
        Self {
            lag,
            lead,
            seasonal_lag,
            seasonal_lead,
            beta,
            dof: 2.0 + rest[0].exp(),
            scale: rest[1].exp(),
        }
    }
}

/// Unconstrained parameter vector of a model.
pub fn theta_of(model: &AnyModel) -> Vec<f64> {
    let b = model.base();
    let mut theta: Vec<f64> = b.lag_coeffs().iter().chain(b.lead_coeffs()).copied().collect();
    match model {
        AnyModel::Mar(_) => {}
        AnyModel::Smar(m) => {
            for term in [m.seasonal_lag(), m.seasonal_lead()] {
                if term.is_present() {
                    theta.push(term.coeff);
                }
            }
        }
        AnyModel::Marx(m) => theta.extend_from_slice(m.beta()),
    }
    theta.push((b.noise().dof() - 2.0).ln());
    theta.push(b.noise().scale().ln());
    theta
}

/// The Student's-t log likelihood of one model shape on one series and one
/// evaluation window `[w0, w1)` (indices into the series).
pub struct Objective<'a> {
    y: &'a [f64],
    shape: ModelShape,
    exog: Vec<Vec<f64>>,
    window: (usize, usize),
}

impl<'a> Objective<'a> {
    pub fn new(
        series: &'a TimeSeries,
        shape: ModelShape,
        x: Option<&ExogenousPanel>,
        window: Option<(usize, usize)>,
    ) -> Result<Self> {
        let y = series.values();
        let exog = if shape.offsets.is_empty() {
            Vec::new()
        } else {
            let x = x.ok_or_else(|| Error::InvalidArgument("MARX estimation needs regressors".into()))?;
            if x.q() != shape.offsets.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} offsets for {} regressors",
                    shape.offsets.len(),
                    x.q()
                )));
            }
            exog_columns(series, x)?
        };
        let (front, back) = shape.edge_loss();
        let natural = (front, y.len().saturating_sub(back));
        let window = window.unwrap_or(natural);
        if window.0 < natural.0 || window.1 > natural.1 || window.0 >= window.1 {
            return Err(Error::InsufficientData(format!(
                "likelihood window {:?} is outside the computable range {:?}",
                window, natural
            )));
        }
        Ok(Self {
            y,
            shape,
            exog,
            window,
        })
    }

    pub fn shape(&self) -> &ModelShape {
        &self.shape
    }

    pub fn window(&self) -> (usize, usize) {
        self.window
    }

    pub fn n_effective(&self) -> usize {
        self.window.1 - self.window.0
    }

    /// Residuals over the window at `theta`, or `None` if `theta` is outside
    /// the stationary region.
    pub fn residuals(&self, theta: &[f64]) -> Option<Vec<f64>> {
        let p = Params::split(&self.shape, theta);
        if !is_stationary_coeffs(p.lag)
            || !is_stationary_coeffs(p.lead)
            || p.seasonal_lag.abs() >= 1.0
            || p.seasonal_lead.abs() >= 1.0
        {
            return None;
        }
        let spec = ResidualSpec {
            lag: p.lag,
            lead: p.lead,
            seasonal_lag: SeasonalTerm {
                coeff: p.seasonal_lag,
                displacement: self.shape.seasonal_lag,
            },
            seasonal_lead: SeasonalTerm {
                coeff: p.seasonal_lead,
                displacement: self.shape.seasonal_lead,
            },
            exog: p
                .beta
                .iter()
                .zip(&self.shape.offsets)
                .zip(&self.exog)
                .map(|((b, o), c)| ExogTerm {
                    beta: *b,
                    offset: *o,
                    column: c,
                })
                .collect(),
        };
        let (front, e) = raw_residuals(self.y, &spec);
        Some(e[self.window.0 - front..self.window.1 - front].to_vec())
    }

    pub fn loglik(&self, theta: &[f64]) -> f64 {
        let p = Params::split(&self.shape, theta);
        if !(p.dof.is_finite() && p.scale.is_finite() && p.scale > 0.0 && p.dof > 2.0) {
            return f64::NEG_INFINITY;
        }
        match self.residuals(theta) {
            Some(e) => {
                let g = TDensity::new(p.dof, p.scale);
                e.iter().map(|v| g.ln_pdf(*v)).sum()
            }
            None => f64::NEG_INFINITY,
        }
    }

    /// Coefficient starts: every split of the Yule-Walker inverse roots
    /// between the lag and the lead polynomial, then a sign and magnitude grid.
    pub fn coefficient_starts(&self, n_starts: usize) -> (Vec<Vec<f64>>, f64) {
        let (r, s) = (self.shape.r, self.shape.s);
        let (yw, var) = yule_walker(self.y, r + s);
        let sd = var.sqrt().max(1e-8);
        let mut starts: Vec<Vec<f64>> = Vec::new();
        let push = |c: Vec<f64>, starts: &mut Vec<Vec<f64>>| {
            if !starts.iter().any(|s| s.iter().zip(&c).all(|(a, b)| (a - b).abs() < 1e-9)) {
                starts.push(c);
            }
        };
        for (lag, lead) in root_splits(&yw, r) {
            push(lag.into_iter().chain(lead).collect(), &mut starts);
        }
        let values = [0.3, 0.8, -0.3, -0.8];
        let lag_choices: Vec<Option<usize>> = if r > 0 { (0..4).map(Some).collect() } else { vec![None] };
        let lead_choices: Vec<Option<usize>> = if s > 0 { (0..4).map(Some).collect() } else { vec![None] };
        let mut grid: Vec<(Option<usize>, Option<usize>)> = Vec::new();
        for a in &lag_choices {
            for b in &lead_choices {
                grid.push((*a, *b));
            }
        }
        grid.sort_by_key(|(a, b)| (a.unwrap_or(0) + b.unwrap_or(0), a.unwrap_or(0)));
        for (a, b) in grid {
            let mut c = vec![0.0; r + s];
            if let Some(i) = a {
                c[0] = values[i];
            }
            if let Some(j) = b {
                c[r] = values[j];
            }
            push(c, &mut starts);
        }
        starts.truncate(n_starts.max(1));
        (starts, sd)
    }
}

/// Splits the inverse roots of `1 - a_1 z - ... - a_p z^p` into `r` for the
/// lag polynomial and the rest for the lead polynomial, keeping complex
/// conjugate pairs together.
fn root_splits(a: &[f64], r: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let p = a.len();
    if p == 0 {
        return vec![(Vec::new(), Vec::new())];
    }
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for (j, v) in a.iter().enumerate() {
        companion[(0, j)] = *v;
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    let eig: Vec<Complex<f64>> = companion.complex_eigenvalues().iter().copied().collect();
    // Groups of one real root or one conjugate pair.
    let mut groups: Vec<Vec<Complex<f64>>> = Vec::new();
    let mut used = vec![false; p];
    for i in 0..p {
        if used[i] {
            continue;
        }
        used[i] = true;
        if eig[i].im.abs() > 1e-10 {
            let partner = (0..p)
                .filter(|j| !used[*j])
                .min_by(|x, y| (eig[*x] - eig[i].conj()).norm().total_cmp(&(eig[*y] - eig[i].conj()).norm()));
            match partner {
                Some(j) => {
                    used[j] = true;
                    groups.push(vec![eig[i], eig[j]]);
                }
                None => groups.push(vec![eig[i]]),
            }
        } else {
            groups.push(vec![Complex::new(eig[i].re, 0.0)]);
        }
    }
    let mut out = Vec::new();
    for mask in 0u32..(1 << groups.len()) {
        let size: usize = (0..groups.len()).filter(|g| mask >> g & 1 == 1).map(|g| groups[g].len()).sum();
        if size != r {
            continue;
        }
        let (mut lag_roots, mut lead_roots) = (Vec::new(), Vec::new());
        for (g, roots) in groups.iter().enumerate() {
            if mask >> g & 1 == 1 {
                lag_roots.extend_from_slice(roots);
            } else {
                lead_roots.extend_from_slice(roots);
            }
        }
        out.push((poly_from_inverse_roots(&lag_roots), poly_from_inverse_roots(&lead_roots)));
    }
    out
}

/// Coefficients `c` of `prod (1 - l z) = 1 - c_1 z - ... - c_k z^k`.
fn poly_from_inverse_roots(roots: &[Complex<f64>]) -> Vec<f64> {
    let mut d = vec![Complex::new(1.0, 0.0)];
    for l in roots {
        let mut next = vec![Complex::new(0.0, 0.0); d.len() + 1];
        for (k, v) in d.iter().enumerate() {
            next[k] += v;
            next[k + 1] -= v * l;
        }
        d = next;
    }
    d[1..].iter().map(|v| -v.re).collect()
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: AnyModel,
    pub loglik: f64,
    pub n_effective: usize,
    /// `-2 loglik + k ln(n_effective)`.
    pub bic: f64,
    /// Observed-information standard errors of [`FitResult::params`].
    pub std_errors: Option<Vec<f64>>,
    pub converged: bool,
    pub grad_norm: f64,
    pub n_starts_used: usize,
    /// Date of the first residual in the likelihood.
    pub sample_start: YearMonth,
    /// `[first, end)` indices of the likelihood window in the fitted series.
    pub window: (usize, usize),
    pub regressor_names: Option<Vec<String>>,
}

impl FitResult {
    pub fn shape(&self) -> ModelShape {
        ModelShape::of(&self.model)
    }

    /// Natural parameters: coefficients, seasonal coefficients, loadings,
    /// then dof and scale.
    pub fn params(&self) -> Vec<f64> {
        let mut theta = theta_of(&self.model);
        let k = theta.len();
        theta[k - 2] = self.model.base().noise().dof();
        theta[k - 1] = self.model.base().noise().scale();
        theta
    }

    pub fn param_names(&self) -> Vec<String> {
        self.shape().param_names(self.regressor_names.as_deref())
    }

    pub fn theta(&self) -> Vec<f64> {
        theta_of(&self.model)
    }
}

#[derive(Debug, Clone)]
pub struct AmleOptions {
    /// Generated starts (root splits, then the sign/magnitude grid).
    pub n_starts: usize,
    /// Likelihood window; defaults to every computable residual.
    pub window: Option<(usize, usize)>,
    /// Full unconstrained parameter vectors tried before the generated starts.
    pub extra_starts: Vec<Vec<f64>>,
    pub std_errors: bool,
    pub optimizer: Options,
}

impl Default for AmleOptions {
    fn default() -> Self {
        Self {
            n_starts: 8,
            window: None,
            extra_starts: Vec::new(),
            std_errors: true,
            optimizer: Options::default(),
        }
    }
}

/// Observed-information standard errors for the natural parameters.
fn standard_errors(obj: &Objective<'_>, theta: &[f64]) -> Option<Vec<f64>> {
    let f = |t: &[f64]| -obj.loglik(t);
    let h = fd_hessian(&f, theta);
    let k = theta.len();
    let m = DMatrix::from_fn(k, k, |i, j| h[i][j]);
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let inv = m.cholesky()?.inverse();
    let mut se: Vec<f64> = (0..k).map(|i| inv[(i, i)].max(0.0).sqrt()).collect();
    // Delta method for dof = 2 + e^a and scale = e^b.
    se[k - 2] *= theta[k - 2].exp();
    se[k - 1] *= theta[k - 1].exp();
    Some(se)
}

/// Approximate maximum likelihood for any model shape.
pub fn fit_amle(
    series: &TimeSeries,
    shape: ModelShape,
    x: Option<&ExogenousPanel>,
    opts: &AmleOptions,
) -> Result<FitResult> {
    let (r, s) = (shape.r, shape.s);
    if series.len() <= r + s + 10 {
        return Err(Error::InsufficientData(format!(
            "MAR({r},{s}) estimation needs more than {} observations, got {}",
            r + s + 10,
            series.len()
        )));
    }
    let obj = Objective::new(series, shape.clone(), x, opts.window)?;
    let dim = shape.dim();
    let mut starts: Vec<Vec<f64>> = opts.extra_starts.iter().filter(|t| t.len() == dim).cloned().collect();
    if opts.n_starts > 0 {
        let (coeffs, sd) = obj.coefficient_starts(opts.n_starts);
        for c in coeffs {
            let mut theta = c;
            theta.resize(dim - 2, 0.0);
            theta.push((DOF_START - 2.0).ln());
            theta.push(sd.ln());
            starts.push(theta);
        }
    }
    if starts.is_empty() {
        return Err(Error::InvalidArgument("no starting values".into()));
    }
    let mut steps = vec![0.1; dim];
    steps[dim - 2] = 0.5;
    steps[dim - 1] = 0.3;
    let f = |t: &[f64]| -obj.loglik(t);
    let results: Vec<_> = starts
        .par_iter()
        .map(|x0| minimize(&f, x0, &steps, &opts.optimizer))
        .collect();
    // Deterministic reduction: lowest objective, earliest start on ties.
    let best = results
        .iter()
        .enumerate()
        .filter(|(_, m)| m.fx.is_finite())
        .min_by(|(i, a), (j, b)| a.fx.total_cmp(&b.fx).then(i.cmp(j)))
        .map(|(_, m)| m.clone());
    let Some(best) = best else {
        return Err(Error::NonConvergence {
            message: format!("every one of {} starts left the stationary region", starts.len()),
            best_loglik: f64::NEG_INFINITY,
            best_params: starts[0].clone(),
        });
    };
    let model = shape.build(&best.x).map_err(|e| Error::NonConvergence {
        message: format!("optimum is not a valid model: {e}"),
        best_loglik: -best.fx,
        best_params: best.x.clone(),
    })?;
    let loglik = -best.fx;
    let n = obj.n_effective();
    let grad_norm = fd_gradient(&f, &best.x).iter().map(|g| g * g).sum::<f64>().sqrt();
    let std_errors = if opts.std_errors { standard_errors(&obj, &best.x) } else { None };
    Ok(FitResult {
        model,
        loglik,
        n_effective: n,
        bic: -2.0 * loglik + dim as f64 * (n as f64).ln(),
        std_errors,
        converged: best.converged,
        grad_norm,
        n_starts_used: starts.len(),
        sample_start: series.date(obj.window().0),
        window: obj.window(),
        regressor_names: x.filter(|_| !shape.offsets.is_empty()).map(|x| x.names().to_vec()),
    })
}

/// AMLE of a MAR(r, s) on every computable residual.
pub fn fit_mar_amle(series: &TimeSeries, r: usize, s: usize, n_starts: usize) -> Result<FitResult> {
    fit_amle(
        series,
        ModelShape::mar(r, s),
        None,
        &AmleOptions {
            n_starts,
            ..Default::default()
        },
    )
}

/// Log likelihood of a given model on `series` over `window` (defaults to
/// every computable residual).
pub fn loglik_of(
    series: &TimeSeries,
    model: &AnyModel,
    x: Option<&ExogenousPanel>,
    window: Option<(usize, usize)>,
) -> Result<f64> {
    let obj = Objective::new(series, ModelShape::of(model), x, window)?;
    Ok(obj.loglik(&theta_of(model)))
}
