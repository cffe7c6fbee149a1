//! Mixed causal-noncausal autoregressions with Student's-t errors:
//! estimation, predictive densities, probability-in-bounds forecasts and
//! ROC-based evaluation of credibility indices.

pub mod cli;
pub mod credibility;
pub mod error;
pub mod estimation;
pub mod forecast;
pub mod kv;
pub mod linalg;
pub mod optim;
pub mod process;
pub mod rng;
pub mod student_t;
pub mod timeseries;

pub use error::{Error, Result};
