//! Multilevel Monte Carlo over the dyadic levels of one fBM path.

mod estimate;
mod functional;
mod plan;

pub use estimate::{estimate, level_difference, LevelStats, MlmcEstimate, SamplerMode};
pub use functional::{FunctionalSpec, PathFunctional};
pub use plan::{allocate, MlmcPlan};
