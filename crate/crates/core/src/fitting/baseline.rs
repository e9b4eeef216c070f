//! Independent Gaussian fit per (event, adverbial) pair.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lm::{self, LeastSquaresProblem, NormalEquations};
use super::{FitConfig, FitReport, FittedModel, ResidualMode};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{gaussian_kernel, PairGaussianModel, PairKey, PairParams, Predictor};

/// Parameters are `(mu / scale, ln(sigma / scale))` with `scale` the pair's
/// median elapsed time, which keeps both coordinates of order one.
struct PairProblem {
    scale: f64,
    /// `(minutes, target)` in canonical order.
    samples: Vec<(f64, f64)>,
}

impl PairProblem {
    fn params_to_pair(&self, p: &[f64]) -> (f64, f64) {
        (p[0] * self.scale, p[1].exp() * self.scale)
    }
}

impl LeastSquaresProblem for PairProblem {
    fn n_params(&self) -> usize {
        2
    }

    fn cost(&self, p: &[f64]) -> f64 {
        let (mu, sigma) = self.params_to_pair(p);
        self.samples
            .iter()
            .map(|&(t, y)| {
                let r = gaussian_kernel(t, mu, sigma) - y;
                r * r
            })
            .sum()
    }

    fn normal_equations(&self, p: &[f64]) -> NormalEquations {
        let (mu, sigma) = self.params_to_pair(p);
        let mut jtj = DMatrix::zeros(2, 2);
        let mut jtr = DVector::zeros(2);
        let mut cost = 0.0;
        for &(t, y) in &self.samples {
            let u = (t - mu) / sigma;
            let k = (-0.5 * u * u).exp();
            let r = k - y;
            cost += r * r;
            // d/d(mu/scale) and d/d(ln(sigma/scale))
            let vals = [k * u / sigma * self.scale, k * u * u];
            for i in 0..2 {
                jtr[i] += vals[i] * r;
                for j in 0..2 {
                    jtj[(i, j)] += vals[i] * vals[j];
                }
            }
        }
        NormalEquations { cost, jtj, jtr }
    }
}

struct PairFit {
    params: PairParams,
    cost: f64,
    iterations: usize,
    converged: bool,
    identifiable: bool,
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn fit_pair(samples: Vec<(f64, f64)>, config: &FitConfig, seed: u64) -> Result<PairFit> {
    let mut times: Vec<f64> = samples.iter().map(|s| s.0).collect();
    times.sort_by(f64::total_cmp);
    let med = median_sorted(&times);
    let scale = if med > 0.0 { med } else { times.last().copied().filter(|&t| t > 0.0).unwrap_or(1.0) };

    // Cell means over distinct times, for start selection and degeneracy checks.
    let mut cells: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
    for &(t, y) in &samples {
        let c = cells.entry(t.to_bits()).or_insert((t, 0.0, 0));
        c.1 += y;
        c.2 += 1;
    }
    let first = samples[0].1;
    let flat = samples.iter().all(|s| s.1 == first);

    let problem = PairProblem { scale, samples };
    if cells.len() < 2 || flat {
        let weight: f64 = problem.samples.iter().map(|s| s.1).sum();
        let mu = if weight > 0.0 {
            problem.samples.iter().map(|s| s.0 * s.1).sum::<f64>() / weight
        } else {
            problem.samples.iter().map(|s| s.0).sum::<f64>() / problem.samples.len() as f64
        };
        let params = PairParams::new(mu, scale)?;
        let cost = problem.cost(&[mu / scale, 0.0]);
        return Ok(PairFit { params, cost, iterations: 0, converged: true, identifiable: false });
    }

    let mut ranked: Vec<(f64, f64)> = cells.values().map(|&(t, sum, n)| (t, sum / n as f64)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    let t_min = times[0];
    let t_max = times[times.len() - 1];

    let settings = config.lm_settings();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<lm::LmOutcome> = None;
    for k in 0..config.multistart_count {
        let mu0 = ranked[k % ranked.len()].0;
        let sigma0 = if k == 0 {
            ((t_max - t_min) / 2.0).max(scale * 1e-3)
        } else {
            let width = mu0.abs().max(t_max - t_min).max(scale * 1e-3);
            width * rng.random_range(-3.0f64..1.0).exp()
        };
        let start = [mu0 / scale, (sigma0 / scale).ln()];
        let out = lm::minimize(&problem, &start, &settings);
        if best.as_ref().is_none_or(|b| out.cost < b.cost) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one start");
    let (mu, sigma) = problem.params_to_pair(&best.params);
    Ok(PairFit {
        params: PairParams::new(mu, sigma)?,
        cost: best.cost,
        iterations: best.iterations,
        converged: best.converged,
        identifiable: true,
    })
}

/// Fits one Gaussian over elapsed minutes to each (event, adverbial) pair on its own records.
///
/// Pairs with a single distinct time or constant ratings get `mu` at the
/// rating-weighted elapsed time, `sigma` at the pair's median time, and are listed
/// in [`FitReport::non_identifiable`].
pub fn fit_baseline(data: &Dataset, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Input("cannot fit an empty dataset".into()));
    }

    let mut groups: BTreeMap<PairKey, Vec<(f64, f64)>> = BTreeMap::new();
    for i in data.canonical_order() {
        let r = &data.records[i];
        groups.entry((r.event.clone(), r.adverbial.clone())).or_default().push((r.minutes(), r.rating));
    }
    if config.residual_mode == ResidualMode::PerCellMean {
        for samples in groups.values_mut() {
            let mut cells: Vec<(f64, f64, usize)> = Vec::new();
            for &(t, y) in samples.iter() {
                match cells.last_mut() {
                    Some(c) if c.0 == t => {
                        c.1 += y;
                        c.2 += 1;
                    }
                    _ => cells.push((t, y, 1)),
                }
            }
            *samples = cells.into_iter().map(|(t, s, n)| (t, s / n as f64)).collect();
        }
    }

    let mut pairs = Vec::with_capacity(groups.len());
    let mut non_identifiable = Vec::new();
    let (mut cost, mut iterations, mut converged, mut residual_count) = (0.0, 0, true, 0);
    for (k, (key, samples)) in groups.into_iter().enumerate() {
        residual_count += samples.len();
        let fit = fit_pair(samples, config, config.seed.wrapping_add(k as u64))?;
        cost += fit.cost;
        iterations += fit.iterations;
        converged &= fit.converged;
        if !fit.identifiable {
            non_identifiable.push(key.clone());
        }
        pairs.push((key, fit.params));
    }
    let model = PairGaussianModel::new(pairs)?;
    Ok(FitReport {
        parameter_count: model.parameter_count(),
        function_count: model.function_count(),
        model: FittedModel::Baseline(model),
        final_cost: cost,
        iterations,
        converged,
        residual_count,
        non_identifiable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::JudgmentRecord;
    use crate::units::Duration;

    fn dataset(rows: &[(&str, &str, f64, f64)]) -> Dataset {
        Dataset::new(
            rows.iter()
                .map(|&(e, a, t, y)| JudgmentRecord::new(e, a, Duration::minutes(t).unwrap(), y, None).unwrap())
                .collect(),
            Default::default(),
        )
    }

    #[test]
    fn recovers_a_pair_gaussian_exactly() {
        let (mu, sigma) = (1000.0, 300.0);
        let rows: Vec<(&str, &str, f64, f64)> = (0..7)
            .map(|i| {
                let t = 200.0 + 350.0 * i as f64;
                ("E", "A", t, gaussian_kernel(t, mu, sigma))
            })
            .collect();
        let report = fit_baseline(&dataset(&rows), &FitConfig::default()).unwrap();
        let FittedModel::Baseline(model) = &report.model else { panic!() };
        let p = model.pair("E", "A").unwrap();
        assert!(((p.mu - mu) / mu).abs() < 1e-6, "{p:?}");
        assert!(((p.sigma - sigma) / sigma).abs() < 1e-6, "{p:?}");
        assert!(report.non_identifiable.is_empty());
    }

    #[test]
    fn single_time_all_ones_anchors_mu() {
        let ds = dataset(&[("E", "A", 720.0, 1.0), ("E", "A", 720.0, 1.0), ("E", "A", 720.0, 1.0)]);
        let report = fit_baseline(&ds, &FitConfig::default()).unwrap();
        let FittedModel::Baseline(model) = &report.model else { panic!() };
        assert_eq!(model.pair("E", "A").unwrap().mu, 720.0);
        assert_eq!(report.non_identifiable, vec![("E".to_string(), "A".to_string())]);
        assert_eq!(report.final_cost, 0.0);
    }

    #[test]
    fn one_function_per_pair() {
        let mut rows = Vec::new();
        for e in ["E1", "E2", "E3"] {
            for a in ["A1", "A2"] {
                for (t, y) in [(10.0, 0.9), (100.0, 0.5), (1000.0, 0.1)] {
                    rows.push((e, a, t, y));
                }
            }
        }
        let report = fit_baseline(&dataset(&rows), &FitConfig::default()).unwrap();
        assert_eq!(report.function_count, 6);
        assert_eq!(report.parameter_count, 12);
        assert_eq!(report.residual_count, 18);
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(fit_baseline(&Dataset::default(), &FitConfig::default()), Err(Error::Input(_))));
    }
}
