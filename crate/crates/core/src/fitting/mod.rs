//! Least-squares estimation of the factorized model and the per-pair baseline.

mod baseline;
mod factorized;
pub mod lm;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{FactorizedModel, PairGaussianModel, PairKey, Predictor};

pub use baseline::fit_baseline;
pub use factorized::{fit_factorized, jacobian_factorized, parameter_layout, residuals_factorized};

/// What each residual compares a prediction against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualMode {
    /// One residual per vote.
    #[default]
    PerVote,
    /// One residual per (event, adverbial, time) cell, against the cell's mean rating.
    PerCellMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the cost by less than this fraction.
    pub cost_tolerance: f64,
    /// Stop once the step norm falls below this, relative to the parameter norm.
    pub param_tolerance: f64,
    pub multistart_count: usize,
    pub seed: u64,
    pub residual_mode: ResidualMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 500,
            cost_tolerance: 1e-10,
            param_tolerance: 1e-8,
            multistart_count: 8,
            seed: 0,
            residual_mode: ResidualMode::PerVote,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.multistart_count == 0 {
            return Err(Error::Input("max_iterations and multistart_count must be positive".into()));
        }
        for (name, v) in [("cost_tolerance", self.cost_tolerance), ("param_tolerance", self.param_tolerance)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Input(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub(crate) fn lm_settings(&self) -> lm::LmSettings {
        lm::LmSettings {
            max_iterations: self.max_iterations,
            cost_tolerance: self.cost_tolerance,
            param_tolerance: self.param_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Factorized(FactorizedModel),
    Baseline(PairGaussianModel),
}

impl FittedModel {
    pub fn as_predictor(&self) -> &dyn Predictor {
        match self {
            FittedModel::Factorized(m) => m,
            FittedModel::Baseline(m) => m,
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            FittedModel::Factorized(m) => m.to_json(),
            FittedModel::Baseline(m) => m.to_json(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: FittedModel,
    /// Sum of squared residuals.
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual_count: usize,
    pub parameter_count: usize,
    pub function_count: usize,
    /// Baseline pairs whose sigma the data cannot determine.
    pub non_identifiable: Vec<PairKey>,
}

impl FitReport {
    pub fn rmse(&self) -> f64 {
        if self.residual_count == 0 {
            0.0
        } else {
            (self.final_cost / self.residual_count as f64).sqrt()
        }
    }

    /// Model file contents with the fit statistics added as extra top-level fields.
    /// The result still loads as a model file.
    pub fn to_json(&self) -> String {
        let mut obj: Map<String, Value> =
            serde_json::from_str(&self.model.to_json()).expect("model json is an object");
        obj.insert("final_cost".into(), self.final_cost.into());
        obj.insert("rmse".into(), self.rmse().into());
        obj.insert("iterations".into(), self.iterations.into());
        obj.insert("converged".into(), self.converged.into());
        obj.insert("residual_count".into(), self.residual_count.into());
        obj.insert("parameter_count".into(), self.parameter_count.into());
        obj.insert("function_count".into(), self.function_count.into());
        if !self.non_identifiable.is_empty() {
            let pairs: Vec<Value> = self
                .non_identifiable
                .iter()
                .map(|(e, a)| serde_json::json!({ "event": e, "adverbial": a }))
                .collect();
            obj.insert("non_identifiable_sigma".into(), pairs.into());
        }
        serde_json::to_string_pretty(&Value::Object(obj)).expect("report serializes")
    }
}
