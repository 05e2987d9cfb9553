//! Escape-rate sweeps over a shared reduced problem.
//!
//! Overlap data and domain reduction depend only on the map and the grid, so
//! a sweep computes them once and dispatches the per-alpha solves to a worker
//! pool over the shared immutable data.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::reduce::ReducedProblem;
use crate::scalar::{real, Scalar};
use crate::solver::{solve, MaxentSolution, SolverConfig};

/// Expands `start:stop:step` into concrete sweep values.
pub fn alpha_range<F: Scalar>(start: F, stop: F, step: F) -> Result<Vec<F>> {
    if !(step > F::zero()) {
        return Err(Error::InvalidConfig("alpha step must be positive".into()));
    }
    if start > stop {
        return Err(Error::InvalidConfig(format!(
            "empty alpha range: start {start} exceeds stop {stop}"
        )));
    }
    // Tolerate the usual float drift at the right endpoint.
    let count = ((stop - start) / step + real(1e-9))
        .floor()
        .to_usize()
        .unwrap_or(0);
    let values: Vec<F> = (0..=count)
        .map(|i| start + F::from_usize(i).unwrap() * step)
        .collect();
    for &alpha in &values {
        if !(alpha > F::zero() && alpha < F::one()) {
            return Err(Error::InvalidConfig(format!(
                "sweep value {alpha} lies outside (0, 1)"
            )));
        }
    }
    Ok(values)
}

#[derive(Debug, Clone)]
pub struct SweepRow<F = f64> {
    pub alpha: F,
    pub entropy: F,
    pub neg_entropy: F,
    pub dual_value: F,
    pub survivor_mass: F,
    pub residual_sup: F,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport<F = f64> {
    pub rows: Vec<SweepRow<F>>,
    /// Sweep value attaining the largest entropy among converged rows.
    pub argmax_alpha: Option<F>,
}

impl<F: Scalar> SweepReport<F> {
    fn from_rows(rows: Vec<SweepRow<F>>) -> Self {
        let argmax_alpha = rows
            .iter()
            .filter(|r| r.converged)
            .max_by(|a, b| {
                a.entropy
                    .partial_cmp(&b.entropy)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|r| r.alpha);
        Self { rows, argmax_alpha }
    }
}

fn row_for<F: Scalar>(alpha: F, outcome: &Result<MaxentSolution<F>>) -> SweepRow<F> {
    match outcome {
        Ok(solution) => SweepRow {
            alpha,
            entropy: solution.entropy,
            neg_entropy: -solution.entropy,
            dual_value: solution.dual_value,
            survivor_mass: solution.survivor_mass,
            residual_sup: solution.moment_residual_sup,
            iterations: solution.iterations,
            converged: true,
            error: None,
        },
        Err(err) => {
            let iterations = match err {
                Error::NoConvergence { iterations, .. } => *iterations,
                Error::DualDivergence { iteration, .. } => *iteration,
                _ => 0,
            };
            SweepRow {
                alpha,
                entropy: F::nan(),
                neg_entropy: F::nan(),
                dual_value: F::nan(),
                survivor_mass: F::nan(),
                residual_sup: F::nan(),
                iterations,
                converged: false,
                error: Some(err.to_string()),
            }
        }
    }
}

/// Solves every alpha against the shared reduced problem. Failed values are
/// reported as non-converged rows instead of aborting the sweep.
pub fn run_sweep<F: Scalar>(
    reduced: &ReducedProblem<F>,
    alphas: &[F],
    tol: F,
    max_iter: usize,
    divergence_bound: F,
) -> (SweepReport<F>, Vec<Result<MaxentSolution<F>>>) {
    let outcomes: Vec<Result<MaxentSolution<F>>> = alphas
        .par_iter()
        .map(|&alpha| {
            let config = SolverConfig {
                alpha,
                tol,
                max_iter,
                divergence_bound,
            };
            solve(reduced, &config)
        })
        .collect();
    let rows = alphas
        .iter()
        .zip(&outcomes)
        .map(|(&alpha, outcome)| row_for(alpha, outcome))
        .collect();
    (SweepReport::from_rows(rows), outcomes)
}
