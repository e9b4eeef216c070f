//! Joint fit of all event and adverbial parameters over every record.
//!
//! Free parameters, in order: `ln sigma_e` for each event (id order), then
//! `(mu_a, ln sigma_a)` for each adverbial (id order).

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lm::{self, LeastSquaresProblem, NormalEquations};
use super::{FitConfig, FitReport, FittedModel, ResidualMode};
use crate::dataset::Dataset;
use crate::erf::std_normal_cdf;
use crate::error::{Error, Result};
use crate::model::{composite_at_minutes, composite_gradient, AdverbialParams, EventParams, FactorizedModel, Predictor};

/// One residual per record, `prediction - rating`, in dataset order.
pub fn residuals_factorized(model: &FactorizedModel, data: &Dataset) -> Result<Vec<f64>> {
    data.records
        .iter()
        .map(|r| {
            let ev = model.event(&r.event)?;
            let adv = model.adverbial(&r.adverbial)?;
            Ok(composite_at_minutes(r.minutes(), ev, adv) - r.rating)
        })
        .collect()
}

/// Column labels of [`jacobian_factorized`] for `model`.
pub fn parameter_layout(model: &FactorizedModel) -> Vec<String> {
    model
        .events()
        .map(|e| format!("ln_sigma_e[{}]", e.id))
        .chain(model.adverbials().flat_map(|a| [format!("mu_a[{}]", a.id), format!("ln_sigma_a[{}]", a.id)]))
        .collect()
}

/// Analytic Jacobian of [`residuals_factorized`]: one row per record (dataset
/// order), one column per free parameter (see [`parameter_layout`]).
pub fn jacobian_factorized(model: &FactorizedModel, data: &Dataset) -> Result<DMatrix<f64>> {
    let event_col: BTreeMap<&str, usize> = model.events().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
    let n_events = model.n_events();
    let adv_col: BTreeMap<&str, usize> =
        model.adverbials().enumerate().map(|(j, a)| (a.id.as_str(), n_events + 2 * j)).collect();

    let mut jac = DMatrix::zeros(data.len(), n_events + 2 * model.n_adverbials());
    for (row, r) in data.records.iter().enumerate() {
        let ev = model.event(&r.event)?;
        let adv = model.adverbial(&r.adverbial)?;
        let g = composite_gradient(r.minutes(), ev, adv);
        let a_col = adv_col[r.adverbial.as_str()];
        jac[(row, event_col[r.event.as_str()])] = g.d_sigma_e * ev.sigma_e;
        jac[(row, a_col)] = g.d_mu_a;
        jac[(row, a_col + 1)] = g.d_sigma_a * adv.sigma_a;
    }
    Ok(jac)
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    event: usize,
    adverbial: usize,
    minutes: f64,
    target: f64,
}

/// Collapses consecutive samples sharing (event, adverbial, time) into their mean.
fn cell_means(samples: impl IntoIterator<Item = Sample>) -> Vec<Sample> {
    let mut cells: Vec<(Sample, usize)> = Vec::new();
    for s in samples {
        match cells.last_mut() {
            Some((c, n)) if c.event == s.event && c.adverbial == s.adverbial && c.minutes == s.minutes => {
                c.target += s.target;
                *n += 1;
            }
            _ => cells.push((s, 1)),
        }
    }
    cells.into_iter().map(|(c, n)| Sample { target: c.target / n as f64, ..c }).collect()
}

struct FactorizedProblem {
    event_ids: Vec<String>,
    adverbial_ids: Vec<String>,
    /// Canonical order; every sum below runs over this vector front to back.
    samples: Vec<Sample>,
}

impl FactorizedProblem {
    fn new(data: &Dataset, mode: ResidualMode) -> Self {
        let event_ids: Vec<String> = data.event_ids().into_iter().map(str::to_string).collect();
        let adverbial_ids: Vec<String> = data.adverbial_ids().into_iter().map(str::to_string).collect();
        let ev_idx: BTreeMap<&str, usize> = event_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let adv_idx: BTreeMap<&str, usize> =
            adverbial_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();

        let per_vote = data.canonical_order().into_iter().map(|i| {
            let r = &data.records[i];
            Sample {
                event: ev_idx[r.event.as_str()],
                adverbial: adv_idx[r.adverbial.as_str()],
                minutes: r.minutes(),
                target: r.rating,
            }
        });

        let samples = match mode {
            ResidualMode::PerVote => per_vote.collect(),
            ResidualMode::PerCellMean => cell_means(per_vote),
        };
        FactorizedProblem { event_ids, adverbial_ids, samples }
    }

    fn n_events(&self) -> usize {
        self.event_ids.len()
    }

    fn unpack(&self, params: &[f64]) -> (Vec<EventParams>, Vec<AdverbialParams>) {
        let ne = self.n_events();
        let events = self
            .event_ids
            .iter()
            .zip(params)
            .map(|(id, &ln_s)| EventParams { id: id.clone(), sigma_e: ln_s.exp() })
            .collect();
        let adverbials = self
            .adverbial_ids
            .iter()
            .enumerate()
            .map(|(j, id)| AdverbialParams {
                id: id.clone(),
                mu_a: params[ne + 2 * j],
                sigma_a: params[ne + 2 * j + 1].exp(),
            })
            .collect();
        (events, adverbials)
    }

    fn model(&self, params: &[f64]) -> Result<FactorizedModel> {
        let (events, adverbials) = self.unpack(params);
        FactorizedModel::new(events, adverbials)
    }
}

impl LeastSquaresProblem for FactorizedProblem {
    fn n_params(&self) -> usize {
        self.n_events() + 2 * self.adverbial_ids.len()
    }

    fn cost(&self, params: &[f64]) -> f64 {
        let (events, adverbials) = self.unpack(params);
        self.samples
            .iter()
            .map(|s| {
                let r = composite_at_minutes(s.minutes, &events[s.event], &adverbials[s.adverbial]) - s.target;
                r * r
            })
            .sum()
    }

    fn normal_equations(&self, params: &[f64]) -> NormalEquations {
        let n = self.n_params();
        let ne = self.n_events();
        let (events, adverbials) = self.unpack(params);
        let mut jtj = DMatrix::zeros(n, n);
        let mut jtr = DVector::zeros(n);
        let mut cost = 0.0;
        for s in &self.samples {
            let ev = &events[s.event];
            let adv = &adverbials[s.adverbial];
            let g = composite_gradient(s.minutes, ev, adv);
            let r = g.value - s.target;
            cost += r * r;
            let cols = [s.event, ne + 2 * s.adverbial, ne + 2 * s.adverbial + 1];
            let vals = [g.d_sigma_e * ev.sigma_e, g.d_mu_a, g.d_sigma_a * adv.sigma_a];
            for (&ci, &vi) in cols.iter().zip(&vals) {
                jtr[ci] += vi * r;
                for (&cj, &vj) in cols.iter().zip(&vals) {
                    jtj[(ci, cj)] += vi * vj;
                }
            }
        }
        NormalEquations { cost, jtj, jtr }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// The two deterministic starts. The first comes from a coarse block grid search.
/// The second puts each `sigma_e` at the event's median elapsed time and spreads
/// `mu_a` evenly over `[0.3, 1.0]` in the order of the first start's `mu_a`, with
/// `sigma_a = 0.1`. Neither alone finds the global optimum on every dataset.
fn initial_guesses(problem: &FactorizedProblem) -> [Vec<f64>; 2] {
    let ne = problem.n_events();
    let na = problem.adverbial_ids.len();
    let mut times: Vec<Vec<f64>> = vec![Vec::new(); ne];
    for s in &problem.samples {
        times[s.event].push(s.minutes);
    }
    let medians: Vec<f64> = times.iter_mut().map(|t| median(t).max(1e-6)).collect();

    let grid = grid_start(problem, &medians);
    let mut order: Vec<usize> = (0..na).collect();
    order.sort_by(|&a, &b| grid[ne + 2 * a].total_cmp(&grid[ne + 2 * b]).then(a.cmp(&b)));
    let mut spread: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    spread.resize(ne + 2 * na, 0.1f64.ln());
    for (rank, &j) in order.iter().enumerate() {
        spread[ne + 2 * j] = if na == 1 { 0.65 } else { 0.3 + 0.7 * rank as f64 / (na - 1) as f64 };
    }
    [grid, spread]
}

/// Alternating grid search on cell means: with every `sigma_e` fixed, each
/// adverbial's `(mu_a, sigma_a)` is picked from a grid; then, with the
/// adverbials fixed, each `sigma_e` is picked from a log grid around its current
/// value. Cheap because the blocks decouple once the other side is fixed.
fn grid_start(problem: &FactorizedProblem, medians: &[f64]) -> Vec<f64> {
    const ROUNDS: usize = 3;
    let na = problem.adverbial_ids.len();
    let cells = cell_means(problem.samples.iter().copied());
    let mus: Vec<f64> = (0..=90).map(|i| 0.3 + 0.01 * i as f64).collect();
    let sigmas: Vec<f64> = (0..=24).map(|i| 0.02 * 25f64.powf(i as f64 / 24.0)).collect();
    let scales: Vec<f64> = (0..=40).map(|i| 10f64.powf(-1.0 + 0.05 * i as f64)).collect();

    let mut sigma_e = medians.to_vec();
    let mut adv = vec![(0.65, 0.1); na];
    let sq = |c: &Sample, se: f64, (mu, sa): (f64, f64)| {
        let z = (std_normal_cdf(c.minutes / se) - mu) / sa;
        let r = (-0.5 * z * z).exp() - c.target;
        r * r
    };
    for _ in 0..ROUNDS {
        for (j, slot) in adv.iter_mut().enumerate() {
            let mine: Vec<&Sample> = cells.iter().filter(|c| c.adverbial == j).collect();
            let mut best = (f64::INFINITY, *slot);
            for &mu in &mus {
                for &sa in &sigmas {
                    let cost: f64 = mine.iter().map(|c| sq(c, sigma_e[c.event], (mu, sa))).sum();
                    if cost < best.0 {
                        best = (cost, (mu, sa));
                    }
                }
            }
            *slot = best.1;
        }
        for (i, se) in sigma_e.iter_mut().enumerate() {
            let mine: Vec<&Sample> = cells.iter().filter(|c| c.event == i).collect();
            let mut best = (f64::INFINITY, *se);
            for &k in &scales {
                let cand = *se * k;
                let cost: f64 = mine.iter().map(|c| sq(c, cand, adv[c.adverbial])).sum();
                if cost < best.0 {
                    best = (cost, cand);
                }
            }
            *se = best.1;
        }
    }
    let mut params: Vec<f64> = sigma_e.iter().map(|s| s.ln()).collect();
    for (mu, sa) in adv {
        params.push(mu);
        params.push(sa.ln());
    }
    params
}

fn perturbed(base: &[f64], ne: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    base.iter()
        .enumerate()
        .map(|(i, &p)| {
            if i < ne {
                p + rng.random_range(-1.0..1.0)
            } else if (i - ne) % 2 == 0 {
                p + rng.random_range(-0.15..0.15)
            } else {
                p + rng.random_range(-1.0..1.0)
            }
        })
        .collect()
}

fn check_fit_input(data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Input("cannot fit an empty dataset".into()));
    }
    let mut times: BTreeMap<(&str, &str), BTreeSet<u64>> = BTreeMap::new();
    for r in &data.records {
        times.entry((&r.event, &r.adverbial)).or_default().insert(r.minutes().to_bits());
    }
    if let Some(((e, a), _)) = times.iter().find(|(_, t)| t.len() < 2) {
        return Err(Error::Input(format!("pair ({e}, {a}) needs at least two distinct elapsed times")));
    }
    Ok(())
}

/// Multistart Levenberg-Marquardt fit of the factorized model. Returns the
/// lowest-cost run. Starts alternate between the two [`initial_guesses`], the
/// first use of each unperturbed and later ones seeded perturbations.
pub fn fit_factorized(data: &Dataset, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    check_fit_input(data)?;
    let problem = FactorizedProblem::new(data, config.residual_mode);
    let ne = problem.n_events();
    let settings = config.lm_settings();

    let bases = initial_guesses(&problem);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<lm::LmOutcome> = None;
    for k in 0..config.multistart_count {
        let base = &bases[k % 2];
        let start = if k < 2 { base.clone() } else { perturbed(base, ne, &mut rng) };
        let out = lm::minimize(&problem, &start, &settings);
        if best.as_ref().is_none_or(|b| out.cost < b.cost) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one start");
    let model = problem.model(&best.params)?;
    Ok(FitReport {
        parameter_count: model.parameter_count(),
        function_count: model.function_count(),
        model: FittedModel::Factorized(model),
        final_cost: best.cost,
        iterations: best.iterations,
        converged: best.converged,
        residual_count: problem.samples.len(),
        non_identifiable: Vec::new(),
    })
}
