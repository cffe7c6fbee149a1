//! Predictive densities and probability-in-bounds forecasts for MAR(1,1)
//! and MARX models.

mod gj;
mod lls;
mod paths;
mod sir;

pub use gj::{
    gj_default_grid, gj_density_h1, gj_joint_density, gj_log_joint_density, gj_probability, integrate_between,
    trapezoid, GjDensity, SampleMarginal, DEFAULT_GRID_POINTS,
};
pub use lls::{check_ess, lls_probability, normalize_log_weights, DEFAULT_TRUNCATION};
pub use paths::{
    bounds_at, point_forecast, probability_in_bounds, weighted_median, ForecastPaths, Method, PointForecast,
    ProbabilityForecast, Settings,
};
pub use sir::{
    fit_instrumental, marx_sir_forecast, sir_forecast, systematic_resample, ImportanceTarget, InstrumentalModel,
    SirForecast, SirSettings,
};
