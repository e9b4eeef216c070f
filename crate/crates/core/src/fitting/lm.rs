//! Damped Gauss-Newton (Levenberg-Marquardt) minimizer over a sum of squares.
//!
//! Problems hand back the cost together with the normal-equation pieces
//! `J^T J` and `J^T r`, which lets each problem accumulate them in its own
//! fixed order and keeps the minimizer itself free of data layout concerns.

use nalgebra::{DMatrix, DVector};

/// Cost `sum r_i^2` with `J^T J` and `J^T r` at one parameter vector.
pub struct NormalEquations {
    pub cost: f64,
    pub jtj: DMatrix<f64>,
    pub jtr: DVector<f64>,
}

pub trait LeastSquaresProblem {
    fn n_params(&self) -> usize;
    fn cost(&self, params: &[f64]) -> f64;
    fn normal_equations(&self, params: &[f64]) -> NormalEquations;
}

#[derive(Debug, Clone, Copy)]
pub struct LmSettings {
    pub max_iterations: usize,
    pub cost_tolerance: f64,
    pub param_tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost after each accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

const INITIAL_DAMPING: f64 = 1e-3;
const MAX_DAMPING: f64 = 1e16;
/// Floor for the Marquardt diagonal scaling, so flat directions still receive damping.
const DIAG_FLOOR: f64 = 1e-12;

pub fn minimize<P: LeastSquaresProblem>(problem: &P, start: &[f64], settings: &LmSettings) -> LmOutcome {
    let n = problem.n_params();
    assert_eq!(start.len(), n);
    let mut params = start.to_vec();
    let mut eq = problem.normal_equations(&params);
    let mut history = vec![eq.cost];
    let mut damping = INITIAL_DAMPING;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < settings.max_iterations {
        if eq.cost == 0.0 || !eq.cost.is_finite() {
            converged = eq.cost == 0.0;
            break;
        }
        iterations += 1;

        let mut lhs = eq.jtj.clone();
        for i in 0..n {
            lhs[(i, i)] += damping * eq.jtj[(i, i)].max(DIAG_FLOOR);
        }
        let Some(chol) = lhs.cholesky() else {
            damping *= 10.0;
            if damping > MAX_DAMPING {
                break;
            }
            continue;
        };
        let step = chol.solve(&(-&eq.jtr));
        let step_norm = step.norm();
        let param_norm = params.iter().map(|p| p * p).sum::<f64>().sqrt();
        let small_step = step_norm < settings.param_tolerance * (param_norm + settings.param_tolerance);

        let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
        let trial_cost = problem.cost(&trial);

        if trial_cost.is_finite() && trial_cost < eq.cost {
            let rel_decrease = (eq.cost - trial_cost) / eq.cost;
            params = trial;
            eq = problem.normal_equations(&params);
            history.push(eq.cost);
            damping = (damping / 3.0).max(1e-15);
            if rel_decrease < settings.cost_tolerance || small_step {
                converged = true;
                break;
            }
        } else {
            if small_step {
                converged = true;
                break;
            }
            damping *= 10.0;
            if damping > MAX_DAMPING {
                break;
            }
        }
    }

    LmOutcome { params, cost: eq.cost, iterations, converged, cost_history: history }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rosenbrock as residuals: r = (1 - a, 10 (b - a^2)).
    struct Rosenbrock;

    impl LeastSquaresProblem for Rosenbrock {
        fn n_params(&self) -> usize {
            2
        }

        fn cost(&self, p: &[f64]) -> f64 {
            let r0 = 1.0 - p[0];
            let r1 = 10.0 * (p[1] - p[0] * p[0]);
            r0 * r0 + r1 * r1
        }

        fn normal_equations(&self, p: &[f64]) -> NormalEquations {
            let r = DVector::from_vec(vec![1.0 - p[0], 10.0 * (p[1] - p[0] * p[0])]);
            let j = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, -20.0 * p[0], 10.0]);
            NormalEquations { cost: r.norm_squared(), jtj: j.transpose() * &j, jtr: j.transpose() * r }
        }
    }

    fn settings() -> LmSettings {
        LmSettings { max_iterations: 500, cost_tolerance: 1e-14, param_tolerance: 1e-12 }
    }

    #[test]
    fn solves_rosenbrock() {
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], &settings());
        assert!(out.converged);
        assert!((out.params[0] - 1.0).abs() < 1e-6, "{:?}", out.params);
        assert!((out.params[1] - 1.0).abs() < 1e-6);
        assert!(out.cost < 1e-12);
    }

    #[test]
    fn accepted_costs_never_increase() {
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], &settings());
        assert!(out.cost_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let cfg = LmSettings { max_iterations: 2, ..settings() };
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], &cfg);
        assert!(!out.converged);
        assert_eq!(out.iterations, 2);
    }
}
