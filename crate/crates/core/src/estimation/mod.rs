//! Order selection and approximate maximum likelihood for MAR, MARX and SMAR.

pub mod amle;
pub mod diagnostics;
pub mod pseudo_causal;
pub mod select;

pub use amle::{fit_amle, fit_mar_amle, loglik_of, AmleOptions, FitResult, ModelShape};
pub use diagnostics::{acf, diagnostics, jarque_bera, recursive_estimates, DiagnosticsReport, RecursiveStep};
pub use pseudo_causal::{fit_ardl, fit_pseudo_causal, yule_walker, ArdlFit, PseudoCausalFit};
pub use select::{fit_smar, select_mar, select_marx_offsets, Selection};
