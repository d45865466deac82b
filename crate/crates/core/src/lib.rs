//! Conformal prediction intervals for responses bounded in (0,1).
//!
//! Four regression families are supported: logit-normal models with constant
//! or covariate-dependent dispersion, and beta regressions with constant or
//! covariate-dependent precision. Intervals are built by split or full
//! conformal prediction with raw, Pearson or quantile residual scores.

pub mod analysis;
pub mod conformal;
pub mod data;
pub mod error;
pub mod models;
pub mod numeric;
pub mod optim;
pub mod scores;
pub mod simlab;

pub use conformal::{
    conformal_quantile, full_cp, full_cp_detailed, indicator, split_cp, split_interval, FullConfig,
    FullCpReport, Method, PredictionInterval, SplitConfig,
};
pub use data::{load_csv, read_csv, Dataset, Rescale};
pub use error::{Error, Result};
pub use models::{fit, FitOptions, FittedModel, ModelSpec, WarmStart};
pub use numeric::BetaParams;
pub use scores::{score, ScoreKind};
pub use simlab::{
    bootstrap_interval, run_coverage, union_intersection, CoverageReport, Scenario, ScenarioConfig,
};
