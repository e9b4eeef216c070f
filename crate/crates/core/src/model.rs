//! The factorized adverbial-over-event model, the per-pair Gaussian baseline,
//! and the parameter file formats both share.
//!
//! The factorized model answers "how applicable is adverbial `a` to event `e`
//! that happened `t` minutes ago" as
//!
//! ```text
//! P_e(t)      = (erf(t / (sqrt(2) sigma_e)) + 1) / 2
//! P_a(x)      = exp(-((x - mu_a) / sigma_a)^2 / 2)
//! P(a | e, t) = P_a(P_e(t))
//! ```
//!
//! `P_e` maps elapsed time onto a precedence axis in `(0, 1)`; each adverbial is
//! a fixed, unnormalized Gaussian kernel on that axis.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::erf::{erf_unchecked, std_normal_pdf};
use crate::error::{Error, Result};
use crate::units::Duration;

/// Model file bundled with the repository (fitted event and adverbial parameters).
pub const REFERENCE_MODEL_JSON: &str = include_str!("../../../reference_model.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventParams {
    pub id: String,
    /// Standard deviation of the precedence function, in minutes.
    #[serde(rename = "sigma_e_minutes")]
    pub sigma_e: f64,
}

impl EventParams {
    pub fn new(id: impl Into<String>, sigma_e: f64) -> Result<Self> {
        let id = id.into();
        if !(sigma_e.is_finite() && sigma_e > 0.0) {
            return Err(Error::Input(format!("event `{id}`: sigma_e must be positive and finite, got {sigma_e}")));
        }
        Ok(EventParams { id, sigma_e })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdverbialParams {
    pub id: String,
    pub mu_a: f64,
    pub sigma_a: f64,
}

impl AdverbialParams {
    pub fn new(id: impl Into<String>, mu_a: f64, sigma_a: f64) -> Result<Self> {
        let id = id.into();
        if !mu_a.is_finite() {
            return Err(Error::Input(format!("adverbial `{id}`: mu_a must be finite, got {mu_a}")));
        }
        if !(sigma_a.is_finite() && sigma_a > 0.0) {
            return Err(Error::Input(format!("adverbial `{id}`: sigma_a must be positive and finite, got {sigma_a}")));
        }
        Ok(AdverbialParams { id, mu_a, sigma_a })
    }
}

/// Probability that an event `t_minutes` in the past counts as having happened before now.
///
/// Strictly increasing in `t`, `0.5` at `t = 0`. Negative `t` is accepted.
pub fn event_precedence(t_minutes: f64, ev: &EventParams) -> f64 {
    0.5 * (erf_unchecked(t_minutes / (std::f64::consts::SQRT_2 * ev.sigma_e)) + 1.0)
}

/// Unnormalized Gaussian kernel of the adverbial on the precedence axis. Peaks at exactly 1.
pub fn adverbial_applicability(x: f64, adv: &AdverbialParams) -> f64 {
    gaussian_kernel(x, adv.mu_a, adv.sigma_a)
}

pub(crate) fn gaussian_kernel(x: f64, mu: f64, sigma: f64) -> f64 {
    let u = (x - mu) / sigma;
    (-0.5 * u * u).exp()
}

/// Applicability of `adv` to an instance of `ev` that happened `t` ago.
pub fn composite_probability(t: Duration, ev: &EventParams, adv: &AdverbialParams) -> f64 {
    composite_at_minutes(t.to_minutes(), ev, adv)
}

pub(crate) fn composite_at_minutes(t_minutes: f64, ev: &EventParams, adv: &AdverbialParams) -> f64 {
    adverbial_applicability(event_precedence(t_minutes, ev), adv)
}

/// Value and partial derivatives of the composite probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeGradient {
    pub value: f64,
    pub d_sigma_e: f64,
    pub d_mu_a: f64,
    pub d_sigma_a: f64,
}

/// Composite probability together with its analytic gradient w.r.t. `(sigma_e, mu_a, sigma_a)`.
pub fn composite_gradient(t_minutes: f64, ev: &EventParams, adv: &AdverbialParams) -> CompositeGradient {
    let z = t_minutes / ev.sigma_e;
    let x = event_precedence(t_minutes, ev);
    let dx_dsigma_e = -std_normal_pdf(z) * z / ev.sigma_e;

    let u = (x - adv.mu_a) / adv.sigma_a;
    let k = (-0.5 * u * u).exp();
    let dk_dx = -k * u / adv.sigma_a;
    CompositeGradient {
        value: k,
        d_sigma_e: dk_dx * dx_dsigma_e,
        d_mu_a: k * u / adv.sigma_a,
        d_sigma_a: k * u * u / adv.sigma_a,
    }
}

/// Baseline: a Gaussian kernel directly over elapsed minutes.
pub fn baseline_probability(t: Duration, pair: &PairParams) -> f64 {
    gaussian_kernel(t.to_minutes(), pair.mu, pair.sigma)
}

/// Anything that predicts an applicability degree for `(event, adverbial, minutes)`.
pub trait Predictor {
    fn predict(&self, event: &str, adverbial: &str, t_minutes: f64) -> Result<f64>;
    fn function_count(&self) -> usize;
    fn parameter_count(&self) -> usize;
}

/// One event function per event, one adverbial kernel per adverbial.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FactorizedModel {
    events: BTreeMap<String, EventParams>,
    adverbials: BTreeMap<String, AdverbialParams>,
}

#[derive(Serialize, Deserialize)]
struct FactorizedFile {
    events: Vec<EventParams>,
    adverbials: Vec<AdverbialParams>,
}

impl FactorizedModel {
    pub fn new(
        events: impl IntoIterator<Item = EventParams>,
        adverbials: impl IntoIterator<Item = AdverbialParams>,
    ) -> Result<Self> {
        let mut model = FactorizedModel::default();
        for ev in events {
            let ev = EventParams::new(ev.id, ev.sigma_e)?;
            if model.events.contains_key(&ev.id) {
                return Err(Error::Input(format!("duplicate event id `{}`", ev.id)));
            }
            model.events.insert(ev.id.clone(), ev);
        }
        for adv in adverbials {
            let adv = AdverbialParams::new(adv.id, adv.mu_a, adv.sigma_a)?;
            if model.adverbials.contains_key(&adv.id) {
                return Err(Error::Input(format!("duplicate adverbial id `{}`", adv.id)));
            }
            model.adverbials.insert(adv.id.clone(), adv);
        }
        Ok(model)
    }

    /// The shipped reference parameter set.
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_MODEL_JSON).expect("bundled reference model is valid")
    }

    pub fn event(&self, id: &str) -> Result<&EventParams> {
        self.events.get(id).ok_or_else(|| Error::UnknownEvent(id.to_string()))
    }

    pub fn adverbial(&self, id: &str) -> Result<&AdverbialParams> {
        self.adverbials.get(id).ok_or_else(|| Error::UnknownAdverbial(id.to_string()))
    }

    /// Events in id order.
    pub fn events(&self) -> impl Iterator<Item = &EventParams> {
        self.events.values()
    }

    /// Adverbials in id order.
    pub fn adverbials(&self) -> impl Iterator<Item = &AdverbialParams> {
        self.adverbials.values()
    }

    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    pub fn n_adverbials(&self) -> usize {
        self.adverbials.len()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: FactorizedFile =
            serde_json::from_str(text).map_err(|e| Error::json("<model>", e))?;
        Self::new(file.events, file.adverbials)
    }

    pub fn to_json(&self) -> String {
        let file = FactorizedFile {
            events: self.events.values().cloned().collect(),
            adverbials: self.adverbials.values().cloned().collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: FactorizedFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        Self::new(file.events, file.adverbials)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    /// Applicability of every adverbial for `event` at `t`, in adverbial id order.
    pub fn probabilities(&self, t: Duration, event: &str) -> Result<Vec<(String, f64)>> {
        let ev = self.event(event)?;
        Ok(self
            .adverbials
            .values()
            .map(|adv| (adv.id.clone(), composite_probability(t, ev, adv)))
            .collect())
    }

    /// The adverbial with the highest composite probability; ties go to the smaller id.
    pub fn best_adverbial(&self, t: Duration, event: &str) -> Result<(String, f64)> {
        let mut best: Option<(String, f64)> = None;
        // Iteration is in ascending id order, so a strict comparison keeps the smallest id on ties.
        for (id, p) in self.probabilities(t, event)? {
            if best.as_ref().is_none_or(|(_, bp)| p > *bp) {
                best = Some((id, p));
            }
        }
        best.ok_or_else(|| Error::Input("model has no adverbials".into()))
    }
}

impl Predictor for FactorizedModel {
    fn predict(&self, event: &str, adverbial: &str, t_minutes: f64) -> Result<f64> {
        Ok(composite_at_minutes(t_minutes, self.event(event)?, self.adverbial(adverbial)?))
    }

    fn function_count(&self) -> usize {
        self.events.len() + self.adverbials.len()
    }

    fn parameter_count(&self) -> usize {
        self.events.len() + 2 * self.adverbials.len()
    }
}

/// Gaussian over elapsed minutes for a single (event, adverbial) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairParams {
    pub mu: f64,
    pub sigma: f64,
}

impl PairParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Input(format!("pair gaussian needs finite mu and positive sigma, got ({mu}, {sigma})")));
        }
        Ok(PairParams { mu, sigma })
    }
}

pub type PairKey = (String, String);

/// Non-factorized baseline: an independent Gaussian per (event, adverbial) pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairGaussianModel {
    pairs: BTreeMap<PairKey, PairParams>,
}

#[derive(Serialize, Deserialize)]
struct PairEntry {
    event: String,
    adverbial: String,
    mu_minutes: f64,
    sigma_minutes: f64,
}

#[derive(Serialize, Deserialize)]
struct PairFile {
    pairs: Vec<PairEntry>,
}

impl PairGaussianModel {
    pub fn new(pairs: impl IntoIterator<Item = (PairKey, PairParams)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for ((e, a), p) in pairs {
            let p = PairParams::new(p.mu, p.sigma)?;
            if map.insert((e.clone(), a.clone()), p).is_some() {
                return Err(Error::Input(format!("duplicate pair ({e}, {a})")));
            }
        }
        Ok(PairGaussianModel { pairs: map })
    }

    pub fn pair(&self, event: &str, adverbial: &str) -> Result<&PairParams> {
        // BTreeMap<(String, String), _> cannot be probed with borrowed strs.
        self.pairs
            .iter()
            .find(|((e, a), _)| e == event && a == adverbial)
            .map(|(_, p)| p)
            .ok_or_else(|| Error::UnknownPair { event: event.to_string(), adverbial: adverbial.to_string() })
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&PairKey, &PairParams)> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PairFile = serde_json::from_str(text).map_err(|e| Error::json("<baseline>", e))?;
        Self::from_file(file)
    }

    fn from_file(file: PairFile) -> Result<Self> {
        Self::new(file.pairs.into_iter().map(|p| {
            ((p.event, p.adverbial), PairParams { mu: p.mu_minutes, sigma: p.sigma_minutes })
        }))
    }

    pub fn to_json(&self) -> String {
        let file = PairFile {
            pairs: self
                .pairs
                .iter()
                .map(|((e, a), p)| PairEntry {
                    event: e.clone(),
                    adverbial: a.clone(),
                    mu_minutes: p.mu,
                    sigma_minutes: p.sigma,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("baseline serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: PairFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        Self::from_file(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }
}

impl Predictor for PairGaussianModel {
    fn predict(&self, event: &str, adverbial: &str, t_minutes: f64) -> Result<f64> {
        let p = self.pair(event, adverbial)?;
        Ok(gaussian_kernel(t_minutes, p.mu, p.sigma))
    }

    fn function_count(&self) -> usize {
        self.pairs.len()
    }

    fn parameter_count(&self) -> usize {
        2 * self.pairs.len()
    }
}
