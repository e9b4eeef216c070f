//! Factorized probabilistic model of vague temporal adverbials.
//!
//! An adverbial such as "just" or "long time ago" applied to an event that
//! happened `t` minutes ago is scored by composing an event-specific
//! precedence function with an adverbial-specific Gaussian kernel. The crate
//! evaluates that model, fits it to judgment data by least squares, and
//! compares it against a non-factorized per-pair Gaussian baseline.

pub mod cli;
pub mod dataset;
pub mod erf;
pub mod error;
pub mod evaluation;
pub mod fitting;
pub mod model;
pub mod plot;
pub mod units;

pub use dataset::{generate_synthetic, normalize_likert, Dataset, JudgmentRecord};
pub use error::{Error, Result};
pub use evaluation::{accuracy, compare, extendability_table, AccuracyReport, Comparison, ExtendabilityRow};
pub use fitting::{fit_baseline, fit_factorized, FitConfig, FitReport, FittedModel};
pub use model::{
    adverbial_applicability, baseline_probability, composite_probability, event_precedence, AdverbialParams,
    EventParams, FactorizedModel, PairGaussianModel, PairParams, Predictor,
};
pub use units::{Duration, TimeUnit};
