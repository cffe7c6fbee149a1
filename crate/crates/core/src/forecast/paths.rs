use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::timeseries::{BoundsSeries, YearMonth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Lls,
    Gj,
    Sir,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lls => "LLS",
            Self::Gj => "GJ",
            Self::Sir => "SIR",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LLS" => Ok(Self::Lls),
            "GJ" => Ok(Self::Gj),
            "SIR" => Ok(Self::Sir),
            _ => Err(Error::InvalidArgument(format!("unknown method `{s}` (LLS, GJ or SIR)"))),
        }
    }
}

/// Simulated trajectories `y*_{T+1..T+h}`, optionally weighted.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastPaths {
    origin: YearMonth,
    horizon: usize,
    paths: Vec<Vec<f64>>,
    weights: Option<Vec<f64>>,
}

impl ForecastPaths {
    /// `weights`, when given, must be nonnegative; they are normalized here.
    pub fn new(origin: YearMonth, paths: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<Self> {
        let horizon = paths.first().map(|p| p.len()).unwrap_or(0);
        if paths.is_empty() || horizon == 0 {
            return Err(Error::InvalidArgument("need at least one path of length >= 1".into()));
        }
        if paths.iter().any(|p| p.len() != horizon) {
            return Err(Error::InvalidArgument("paths must share one horizon".into()));
        }
        let weights = match weights {
            None => None,
            Some(w) => {
                if w.len() != paths.len() || w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidArgument("weights must be finite, nonnegative, one per path".into()));
                }
                let total: f64 = w.iter().sum();
                if !(total > 0.0) {
                    return Err(Error::InvalidArgument("weights sum to zero".into()));
                }
                Some(w.iter().map(|v| v / total).collect())
            }
        };
        Ok(Self {
            origin,
            horizon,
            paths,
            weights,
        })
    }

    pub fn origin(&self) -> YearMonth {
        self.origin
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn paths(&self) -> &[Vec<f64>] {
        &self.paths
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.paths.len() as f64,
        }
    }

    /// Values at step `k` (1-based) paired with their weights.
    pub fn step(&self, k: usize) -> Vec<(f64, f64)> {
        self.paths.iter().enumerate().map(|(i, p)| (p[k - 1], self.weight(i))).collect()
    }
}

/// Simulation settings echoed in every forecast.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Settings {
    /// N for LLS, K for SIR, grid size for GJ.
    pub draws: usize,
    /// Truncation M (LLS only).
    pub truncation: Option<usize>,
    /// Resampled paths S (SIR only).
    pub resample: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityForecast {
    pub origin: YearMonth,
    pub horizon: usize,
    pub p_in_bounds: f64,
    pub p_below: f64,
    pub p_above: f64,
    pub method: Method,
    pub settings: Settings,
    /// Effective sample size of the importance weights, where relevant.
    pub ess: Option<f64>,
    /// Predictive mean and median of `y_{T+h}`.
    pub point_mean: Option<f64>,
    pub point_median: Option<f64>,
}

impl ProbabilityForecast {
    /// Builds a forecast from unnormalized masses below, inside and above.
    pub fn from_masses(
        origin: YearMonth,
        horizon: usize,
        below: f64,
        inside: f64,
        above: f64,
        method: Method,
        settings: Settings,
    ) -> Result<Self> {
        let total = below + inside + above;
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Domain("probability masses do not sum to a positive number".into()));
        }
        let p_below = (below / total).clamp(0.0, 1.0);
        let p_above = (above / total).clamp(0.0, 1.0);
        let p_in_bounds = (1.0 - p_below - p_above).clamp(0.0, 1.0);
        Ok(Self {
            origin,
            horizon,
            p_in_bounds,
            p_below,
            p_above,
            method,
            settings,
            ess: None,
            point_mean: None,
            point_median: None,
        })
    }
}

/// Bounds that apply `h` months after `origin`.
pub fn bounds_at(bounds: &BoundsSeries, origin: YearMonth, h: usize) -> Result<(f64, f64)> {
    let target = origin.add_months(h as i64);
    bounds
        .at(target)
        .ok_or_else(|| Error::Alignment(format!("no target bounds for {target}")))
}

/// Weighted share of terminal values below `lb`, in `[lb, ub]`, and above `ub`.
pub fn probability_in_bounds(
    paths: &ForecastPaths,
    bounds: &BoundsSeries,
    method: Method,
    settings: Settings,
) -> Result<ProbabilityForecast> {
    let h = paths.horizon();
    let (lb, ub) = bounds_at(bounds, paths.origin(), h)?;
    let (mut below, mut inside, mut above) = (0.0, 0.0, 0.0);
    let mut step = paths.step(h);
    for &(v, w) in &step {
        if v < lb {
            below += w;
        } else if v > ub {
            above += w;
        } else {
            inside += w;
        }
    }
    let mut f = ProbabilityForecast::from_masses(paths.origin(), h, below, inside, above, method, settings)?;
    f.point_mean = Some(step.iter().map(|(v, w)| v * w).sum());
    f.point_median = Some(weighted_median(&mut step));
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointForecast {
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
}

/// Smallest value whose cumulative weight reaches one half.
pub fn weighted_median(values: &mut [(f64, f64)]) -> f64 {
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = values.iter().map(|v| v.1).sum();
    let mut acc = 0.0;
    for (i, (v, w)) in values.iter().enumerate() {
        acc += w;
        if acc >= 0.5 * total * (1.0 - 1e-12) {
            // Exactly half the mass below: average with the next value.
            if (acc - 0.5 * total).abs() <= 1e-12 * total && i + 1 < values.len() {
                return 0.5 * (v + values[i + 1].0);
            }
            return *v;
        }
    }
    values.last().map(|v| v.0).unwrap_or(f64::NAN)
}

/// Weighted mean and median at each step `1..=h`.
pub fn point_forecast(paths: &ForecastPaths) -> PointForecast {
    let mut mean = Vec::with_capacity(paths.horizon());
    let mut median = Vec::with_capacity(paths.horizon());
    for k in 1..=paths.horizon() {
        let mut step = paths.step(k);
        mean.push(step.iter().map(|(v, w)| v * w).sum());
        median.push(weighted_median(&mut step));
    }
    PointForecast { mean, median }
}
