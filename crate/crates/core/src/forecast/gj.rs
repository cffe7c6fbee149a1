use crate::error::{Error, Result};
use crate::process::AnyModel;
use crate::student_t::TDensity;
use crate::timeseries::{BoundsSeries, Dated, TimeSeries};

use super::lls::mar11_parts;
use super::paths::{bounds_at, Method, ProbabilityForecast, Settings};

pub const DEFAULT_GRID_POINTS: usize = 2001;
const GRID_HALF_WIDTH: f64 = 12.0;

/// Empirical marginal `f(v) ∝ sum_i g(v - m_i)` built from past filtered values.
#[derive(Debug, Clone)]
pub struct SampleMarginal {
    g: TDensity,
    points: Vec<f64>,
}

impl SampleMarginal {
    pub fn new(g: TDensity, points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientData("no past values for the sample-based marginal".into()));
        }
        Ok(Self { g, points })
    }

    /// `ln sum_i g(v - m_i)`.
    pub fn ln_sum(&self, v: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        let logs: Vec<f64> = self
            .points
            .iter()
            .map(|m| {
                let l = self.g.ln_pdf(v - m);
                max = max.max(l);
                l
            })
            .collect();
        if !max.is_finite() {
            return max;
        }
        max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
    }
}

/// Filtered quantities of a MAR(1,1) needed by the sample-based estimators.
#[derive(Debug, Clone)]
pub(crate) struct GjContext {
    pub phi: f64,
    pub psi: f64,
    pub g: TDensity,
    pub y_t: f64,
    pub u: Vec<f64>,
    pub marginal: SampleMarginal,
}

impl GjContext {
    pub fn new(model: &AnyModel, series: &TimeSeries) -> Result<Self> {
        let (phi, psi, g, _) = mar11_parts(model)?;
        let y = series.values();
        if y.len() < 3 {
            return Err(Error::InsufficientData("need at least three observations".into()));
        }
        let u: Vec<f64> = y.windows(2).map(|w| w[1] - phi * w[0]).collect();
        let marginal = SampleMarginal::new(g, u.iter().map(|v| psi * v).collect())?;
        Ok(Self {
            phi,
            psi,
            g,
            y_t: y[y.len() - 1],
            u,
            marginal,
        })
    }

    pub fn u_t(&self) -> f64 {
        self.u[self.u.len() - 1]
    }

    /// Log density of `u_{T+1..T+h}` up to the constant `-ln sum_i g(u_T - psi u_i)`.
    pub fn ln_joint_u(&self, future_u: &[f64]) -> f64 {
        let mut prev = self.u_t();
        let mut acc = 0.0;
        for &u in future_u {
            acc += self.g.ln_pdf(prev - self.psi * u);
            prev = u;
        }
        acc + self.marginal.ln_sum(prev)
    }

    pub fn ln_norm(&self) -> f64 {
        self.marginal.ln_sum(self.u_t())
    }
}

/// Log of the unnormalized joint predictive density of `y*_{T+1..T+h}`.
pub fn gj_log_joint_density(model: &AnyModel, series: &TimeSeries, path: &[f64]) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::InvalidArgument("path must have length >= 1".into()));
    }
    let ctx = GjContext::new(model, series)?;
    let mut prev = ctx.y_t;
    let u: Vec<f64> = path
        .iter()
        .map(|&y| {
            let v = y - ctx.phi * prev;
            prev = y;
            v
        })
        .collect();
    Ok(ctx.ln_joint_u(&u) - ctx.ln_norm())
}

pub fn gj_joint_density(model: &AnyModel, series: &TimeSeries, path: &[f64]) -> Result<f64> {
    gj_log_joint_density(model, series, path).map(f64::exp)
}

/// One-step predictive density on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GjDensity {
    pub grid: Vec<f64>,
    /// Renormalized to integrate to one by the trapezoid rule.
    pub density: Vec<f64>,
    /// Trapezoid integral before renormalization.
    pub raw_integral: f64,
    /// Set when the renormalization factor falls outside `[0.5, 2]`.
    pub grid_warning: bool,
}

impl GjDensity {
    pub fn mean(&self) -> f64 {
        let xy: Vec<f64> = self.grid.iter().zip(&self.density).map(|(x, d)| x * d).collect();
        trapezoid(&self.grid, &xy)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        integrate_between(&self.grid, &self.density, f64::NEG_INFINITY, x)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let mut acc = 0.0;
        for i in 1..self.grid.len() {
            let dx = self.grid[i] - self.grid[i - 1];
            let step = 0.5 * dx * (self.density[i] + self.density[i - 1]);
            if acc + step >= p && step > 0.0 {
                return self.grid[i - 1] + dx * (p - acc) / step;
            }
            acc += step;
        }
        self.grid[self.grid.len() - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn probability(&self, lb: f64, ub: f64) -> f64 {
        integrate_between(&self.grid, &self.density, lb, ub)
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Integral over `[a, b]` of the piecewise-linear interpolant of `(x, y)`.
pub fn integrate_between(x: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    for i in 1..x.len() {
        let (x0, x1) = (x[i - 1], x[i]);
        let lo = x0.max(a);
        let hi = x1.min(b);
        if hi <= lo {
            continue;
        }
        let slope = (y[i] - y[i - 1]) / (x1 - x0);
        let at = |t: f64| y[i - 1] + slope * (t - x0);
        total += 0.5 * (hi - lo) * (at(lo) + at(hi));
    }
    total
}

fn evaluate(ctx: &GjContext, grid: &[f64]) -> Vec<f64> {
    let base = ctx.phi * ctx.y_t;
    let ln_norm = ctx.ln_norm();
    grid.iter()
        .map(|&x| (ctx.ln_joint_u(&[x - base]) - ln_norm).exp())
        .collect()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Grid of `n` points spanning the predictive median plus or minus twelve
/// predictive scale units, the scale being the interquartile range over 1.349.
pub fn gj_default_grid(model: &AnyModel, series: &TimeSeries, n: usize) -> Result<Vec<f64>> {
    let ctx = GjContext::new(model, series)?;
    grid_for(&ctx, n)
}

fn grid_for(ctx: &GjContext, n: usize) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::InvalidArgument("grid needs at least three points".into()));
    }
    let (dof, scale) = (ctx.g.dof(), ctx.g.scale());
    let spread = scale * if dof > 2.0 { (dof / (dof - 2.0)).sqrt() } else { 1.0 };
    let mut anchors: Vec<f64> = ctx.u.clone();
    anchors.push(0.0);
    if ctx.psi.abs() > 0.05 {
        anchors.push(ctx.u_t() / ctx.psi);
    }
    let lo = anchors.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = anchors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 40.0 * spread * (1.0 / ctx.psi.abs().max(1e-3)).clamp(1.0, 10.0);
    let base = ctx.phi * ctx.y_t;
    let coarse_grid = linspace(base + lo - pad, base + hi + pad, 4 * n);
    let coarse = normalized(ctx, coarse_grid)?;
    let median = coarse.median();
    let iqr = coarse.quantile(0.75) - coarse.quantile(0.25);
    let unit = if iqr > 0.0 { iqr / 1.349 } else { spread };
    Ok(linspace(median - GRID_HALF_WIDTH * unit, median + GRID_HALF_WIDTH * unit, n))
}

fn normalized(ctx: &GjContext, grid: Vec<f64>) -> Result<GjDensity> {
    if grid.len() < 2 || grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid must be finite and strictly increasing".into()));
    }
    let raw = evaluate(ctx, &grid);
    let raw_integral = trapezoid(&grid, &raw);
    if !(raw_integral > 0.0) || !raw_integral.is_finite() {
        return Err(Error::Domain("predictive density vanishes on the grid".into()));
    }
    let factor = 1.0 / raw_integral;
    Ok(GjDensity {
        density: raw.iter().map(|v| v * factor).collect(),
        grid,
        raw_integral,
        grid_warning: !(0.5..=2.0).contains(&factor),
    })
}

/// Sample-based one-step predictive density of `y_{T+1}` on `grid`, or on
/// the default grid when `grid` is `None`.
pub fn gj_density_h1(model: &AnyModel, series: &TimeSeries, grid: Option<&[f64]>) -> Result<GjDensity> {
    let ctx = GjContext::new(model, series)?;
    let grid = match grid {
        Some(g) => g.to_vec(),
        None => grid_for(&ctx, DEFAULT_GRID_POINTS)?,
    };
    normalized(&ctx, grid)
}

/// One-step probability in bounds from the sample-based density.
pub fn gj_probability(model: &AnyModel, series: &TimeSeries, bounds: &BoundsSeries, grid_points: usize) -> Result<ProbabilityForecast> {
    let ctx = GjContext::new(model, series)?;
    let density = normalized(&ctx, grid_for(&ctx, grid_points)?)?;
    let (lb, ub) = bounds_at(bounds, series.end(), 1)?;
    let below = density.cdf(lb);
    let inside = density.probability(lb, ub);
    let above = (1.0 - below - inside).max(0.0);
    let mut f = ProbabilityForecast::from_masses(
        series.end(),
        1,
        below,
        inside,
        above,
        Method::Gj,
        Settings {
            draws: grid_points,
            ..Settings::default()
        },
    )?;
    f.point_mean = Some(density.mean());
    f.point_median = Some(density.median());
    Ok(f)
}
