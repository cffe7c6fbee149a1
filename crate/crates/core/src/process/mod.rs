//! Model algebra for mixed causal-noncausal autoregressions.

pub mod expand;
pub mod filter;
pub mod model;
pub mod polynomial;
pub mod simulate;

pub use expand::{expand_additive, invert_to_ma, AdditiveExpansion, TwoSidedMaWeights};
pub use filter::{filter_components, residuals};
pub use model::{AnyModel, MarModel, MarxModel, NoiseSpec, SeasonalTerm, SmarModel};
pub use polynomial::{check_stationarity, Direction, LagPolynomial, StationarityReport};
pub use simulate::{default_burn, simulate, Simulation};
