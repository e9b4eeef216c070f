//! Accuracy (mean absolute error against every vote), function-count
//! extendability, and side-by-side comparison of two models.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fitting::FitReport;
use crate::model::Predictor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub per_event: BTreeMap<String, f64>,
    pub per_adverbial: BTreeMap<String, f64>,
    /// Mean absolute error over all records.
    pub overall: f64,
    /// Root mean squared error over all records.
    pub rmse: f64,
    pub record_count: usize,
}

#[derive(Default)]
struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }

    fn value(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }
}

/// Mean absolute error per event, per adverbial and overall. Groups are plain
/// means over their records; sums run in canonical record order.
pub fn accuracy(model: &dyn Predictor, data: &Dataset) -> Result<AccuracyReport> {
    let mut per_event: BTreeMap<String, Mean> = BTreeMap::new();
    let mut per_adverbial: BTreeMap<String, Mean> = BTreeMap::new();
    let mut overall = Mean::default();
    let mut squared = 0.0;
    for i in data.canonical_order() {
        let r = &data.records[i];
        let diff = model.predict(&r.event, &r.adverbial, r.minutes())? - r.rating;
        let err = diff.abs();
        per_event.entry(r.event.clone()).or_default().push(err);
        per_adverbial.entry(r.adverbial.clone()).or_default().push(err);
        overall.push(err);
        squared += diff * diff;
    }
    let n = data.len();
    Ok(AccuracyReport {
        per_event: per_event.into_iter().map(|(k, m)| (k, m.value())).collect(),
        per_adverbial: per_adverbial.into_iter().map(|(k, m)| (k, m.value())).collect(),
        overall: overall.value(),
        rmse: if n == 0 { 0.0 } else { (squared / n as f64).sqrt() },
        record_count: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendabilityRow {
    pub n_events: usize,
    pub n_adverbials: usize,
    pub factorized_functions: usize,
    pub baseline_functions: usize,
}

impl ExtendabilityRow {
    pub fn new(n_events: usize, n_adverbials: usize) -> Result<Self> {
        if n_events == 0 || n_adverbials == 0 {
            return Err(Error::Input(format!(
                "event and adverbial counts must be positive, got ({n_events}, {n_adverbials})"
            )));
        }
        Ok(ExtendabilityRow {
            n_events,
            n_adverbials,
            factorized_functions: n_events + n_adverbials,
            baseline_functions: n_events * n_adverbials,
        })
    }
}

/// One row per `(event_counts[i], adverbial_counts[i])`.
pub fn extendability_table(event_counts: &[usize], adverbial_counts: &[usize]) -> Result<Vec<ExtendabilityRow>> {
    if event_counts.len() != adverbial_counts.len() {
        return Err(Error::Input(format!(
            "{} event counts but {} adverbial counts",
            event_counts.len(),
            adverbial_counts.len()
        )));
    }
    event_counts.iter().zip(adverbial_counts).map(|(&e, &a)| ExtendabilityRow::new(e, a)).collect()
}

pub fn render_extendability(rows: &[ExtendabilityRow]) -> String {
    let mut out = format!("{:>6}  {:>10}  {:>10}  {:>14}\n", "Events", "Adverbials", "Factorized", "Non-factorized");
    for r in rows {
        let _ = writeln!(
            out,
            "{:>6}  {:>10}  {:>10}  {:>14}",
            r.n_events, r.n_adverbials, r.factorized_functions, r.baseline_functions
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub accuracy: AccuracyReport,
    pub parameter_count: usize,
    pub function_count: usize,
}

/// Factorized minus baseline error for each group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyDifference {
    pub per_event: BTreeMap<String, f64>,
    pub per_adverbial: BTreeMap<String, f64>,
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub factorized: ModelSummary,
    pub baseline: ModelSummary,
    pub difference: AccuracyDifference,
}

fn summarize(model: &dyn Predictor, data: &Dataset) -> Result<ModelSummary> {
    Ok(ModelSummary {
        accuracy: accuracy(model, data)?,
        parameter_count: model.parameter_count(),
        function_count: model.function_count(),
    })
}

fn diff_maps(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    a.iter().map(|(k, v)| (k.clone(), v - b.get(k).copied().unwrap_or(0.0))).collect()
}

pub fn compare(factorized: &dyn Predictor, baseline: &dyn Predictor, data: &Dataset) -> Result<Comparison> {
    let f = summarize(factorized, data)?;
    let b = summarize(baseline, data)?;
    let difference = AccuracyDifference {
        per_event: diff_maps(&f.accuracy.per_event, &b.accuracy.per_event),
        per_adverbial: diff_maps(&f.accuracy.per_adverbial, &b.accuracy.per_adverbial),
        overall: f.accuracy.overall - b.accuracy.overall,
    };
    Ok(Comparison { factorized: f, baseline: b, difference })
}

pub fn compare_reports(factorized: &FitReport, baseline: &FitReport, data: &Dataset) -> Result<Comparison> {
    compare(factorized.model.as_predictor(), baseline.model.as_predictor(), data)
}

/// Single-model accuracy table: type, name, mean absolute error.
pub fn render_accuracy(report: &AccuracyReport) -> String {
    let width = name_width(report.per_event.keys().chain(report.per_adverbial.keys()));
    let mut out = format!("{:<10} {:<width$}  {:>6}\n", "Type", "Name", "Error");
    for (name, v) in &report.per_event {
        let _ = writeln!(out, "{:<10} {:<width$}  {:>6.3}", "Event", name, v);
    }
    for (name, v) in &report.per_adverbial {
        let _ = writeln!(out, "{:<10} {:<width$}  {:>6.3}", "Adverbial", name, v);
    }
    let _ = writeln!(out, "{:<10} {:<width$}  {:>6.3}", "Overall", "", report.overall);
    out
}

pub fn render_comparison(c: &Comparison) -> String {
    let f = &c.factorized.accuracy;
    let b = &c.baseline.accuracy;
    let width = name_width(f.per_event.keys().chain(f.per_adverbial.keys()));
    let mut out = format!("{:<10} {:<width$}  {:>10}  {:>14}  {:>8}\n", "Type", "Name", "Factorized", "Non-factorized", "Diff");
    let mut row = |kind: &str, name: &str, fv: f64, bv: f64| {
        let _ = writeln!(out, "{kind:<10} {name:<width$}  {fv:>10.3}  {bv:>14.3}  {:>+8.3}", fv - bv);
    };
    for (name, v) in &f.per_event {
        row("Event", name, *v, b.per_event.get(name).copied().unwrap_or(f64::NAN));
    }
    for (name, v) in &f.per_adverbial {
        row("Adverbial", name, *v, b.per_adverbial.get(name).copied().unwrap_or(f64::NAN));
    }
    row("Overall", "", f.overall, b.overall);
    let _ = writeln!(
        out,
        "\nFunctions: factorized {} / non-factorized {}\nParameters: factorized {} / non-factorized {}",
        c.factorized.function_count, c.baseline.function_count, c.factorized.parameter_count, c.baseline.parameter_count
    );
    out
}

fn name_width<'a>(names: impl Iterator<Item = &'a String>) -> usize {
    names.map(|n| n.chars().count()).max().unwrap_or(0).max(4)
}
