//! Dual fixed-point solver.
//!
//! With `x_i = exp(lambda_i + lambda_0)`, the stationarity conditions of the
//! reduced dual problem become
//!
//! ```text
//! x_i^(1+a) = a * (sum_j C[i][j] x_j + c_i) / (sum_k C[k][i] x_k^(-a))
//! ```
//!
//! which the componentwise map `psi_step` iterates from the all-ones vector.
//! Convergence is measured in the sup norm of log ratios, matching the
//! multiplicative contraction structure of the update.

use crate::density::{reconstruct_density, PiecewiseDensity};
use crate::dual::{dual_value_and_gradient, moment_residuals};
use crate::error::{Error, Result};
use crate::reduce::ReducedProblem;
use crate::scalar::{real, Scalar};

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig<F = f64> {
    /// Survivor-mass ratio per step; the escape rate is `-ln(alpha)`.
    pub alpha: F,
    /// Convergence tolerance on `sup_i |ln(x'_i / x_i)|`.
    pub tol: F,
    pub max_iter: usize,
    /// Iterate magnitude treated as divergence of the dual.
    pub divergence_bound: F,
}

impl<F: Scalar> SolverConfig<F> {
    pub fn new(alpha: F) -> Self {
        Self {
            alpha,
            tol: real(1e-12),
            max_iter: 1_000_000,
            divergence_bound: real(1e12),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > F::zero() && self.alpha < F::one()) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.tol > F::zero()) {
            return Err(Error::InvalidConfig("tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.divergence_bound > F::one()) {
            return Err(Error::InvalidConfig(
                "divergence bound must exceed 1".into(),
            ));
        }
        Ok(())
    }
}

/// Converged dual iterate.
#[derive(Debug, Clone)]
pub struct DualState<F = f64> {
    /// `x_i = exp(lambda_i + lambda_0)` on active cells, sentinel 1 on cells
    /// with no incoming mass.
    pub x: Vec<F>,
    pub iterations: usize,
    pub final_delta: F,
}

/// One application of the componentwise dual update.
///
/// Coordinates whose cell carries no mass at all (empty column, empty row, no
/// hole mass, the state of dropped cells after reduction) are pinned to 1 and do not
/// influence the solution. A coordinate with an empty column but outgoing or
/// hole mass makes the dual unbounded, which surfaces as `DualDivergence`.
pub fn psi_step<F: Scalar>(
    x: &[F],
    reduced: &ReducedProblem<F>,
    alpha: F,
    divergence_bound: F,
) -> Result<Vec<F>> {
    let n = reduced.n();
    debug_assert_eq!(x.len(), n);
    let matrix = reduced.matrix();
    let exponent = F::one() / (F::one() + alpha);
    let xneg: Vec<F> = x.iter().map(|&v| v.powf(-alpha)).collect();

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (rows, col_vals) = matrix.col(i);
        if rows.is_empty() {
            if matrix.row_nnz(i) == 0 && reduced.hole()[i] == F::zero() {
                out.push(F::one());
                continue;
            }
            return Err(Error::DualDivergence {
                iteration: 0,
                detail: format!(
                    "cell {i} has outgoing mass but no incoming mass; \
                     the dual is unbounded (unreduced problem?)"
                ),
            });
        }
        let mut denominator = F::zero();
        for (&k, &v) in rows.iter().zip(col_vals) {
            denominator = denominator + v * xneg[k];
        }
        let (cols, row_vals) = matrix.row(i);
        let mut numerator = reduced.hole()[i];
        for (&j, &v) in cols.iter().zip(row_vals) {
            numerator = numerator + v * x[j];
        }
        let ratio = alpha * numerator / denominator;
        // Subnormal ratios freeze the iteration at an artificial fixed point,
        // so underflow counts as divergence just like overflow.
        if !ratio.is_finite() || ratio < F::min_positive_value() {
            return Err(Error::DualDivergence {
                iteration: 0,
                detail: format!("update underflowed or overflowed at cell {i} (ratio {ratio:e})"),
            });
        }
        let value = ratio.powf(exponent);
        if !value.is_finite() || value <= F::zero() || value > divergence_bound {
            return Err(Error::DualDivergence {
                iteration: 0,
                detail: format!("iterate left the positive cone at cell {i} (value {value:e})"),
            });
        }
        out.push(value);
    }
    Ok(out)
}

/// Runs the fixed-point iteration from the all-ones start.
pub fn fixed_point<F: Scalar>(
    reduced: &ReducedProblem<F>,
    config: &SolverConfig<F>,
) -> Result<DualState<F>> {
    fixed_point_from(vec![F::one(); reduced.n()], reduced, config)
}

/// Runs the fixed-point iteration from a caller-supplied positive start.
pub fn fixed_point_from<F: Scalar>(
    start: Vec<F>,
    reduced: &ReducedProblem<F>,
    config: &SolverConfig<F>,
) -> Result<DualState<F>> {
    config.validate()?;
    if start.len() != reduced.n() {
        return Err(Error::InvalidConfig(
            "start vector length differs from cell count".into(),
        ));
    }
    if start.iter().any(|v| !v.is_finite() || *v <= F::zero()) {
        return Err(Error::InvalidConfig(
            "start vector must be strictly positive".into(),
        ));
    }

    let mut x = start;
    for iteration in 1..=config.max_iter {
        let next =
            psi_step(&x, reduced, config.alpha, config.divergence_bound).map_err(
                |err| match err {
                    Error::DualDivergence { detail, .. } => {
                        Error::DualDivergence { iteration, detail }
                    }
                    other => other,
                },
            )?;
        let mut delta = F::zero();
        for (new, old) in next.iter().zip(&x) {
            delta = delta.max((*new / *old).ln().abs());
        }
        x = next;
        if delta <= config.tol {
            return Ok(DualState {
                x,
                iterations: iteration,
                final_delta: delta,
            });
        }
        if iteration == config.max_iter {
            return Err(Error::NoConvergence {
                iterations: iteration,
                last_delta: delta.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    unreachable!("loop either converges or errors")
}

/// Full solve: fixed point, density reconstruction and diagnostics.
#[derive(Debug, Clone)]
pub struct MaxentSolution<F = f64> {
    pub alpha: F,
    pub lambda0: F,
    /// Multipliers recovered from the fixed point. Non-unique in general;
    /// diagnostic only; the contract outputs are density, entropy and the
    /// residuals.
    pub lambda: Vec<F>,
    pub density: PiecewiseDensity<F>,
    pub entropy: F,
    pub dual_value: F,
    pub moment_residual_sup: F,
    /// Mass of the density on the surviving part of the domain; equals alpha
    /// at a converged solution.
    pub survivor_mass: F,
    pub iterations: usize,
    pub final_delta: F,
}

impl<F: Scalar> MaxentSolution<F> {
    /// `|H(f) + Q(lambda)|`; zero at optimality.
    pub fn duality_gap(&self) -> F {
        (self.entropy + self.dual_value).abs()
    }
}

pub fn solve<F: Scalar>(
    reduced: &ReducedProblem<F>,
    config: &SolverConfig<F>,
) -> Result<MaxentSolution<F>> {
    solve_from(vec![F::one(); reduced.n()], reduced, config)
}

pub fn solve_from<F: Scalar>(
    start: Vec<F>,
    reduced: &ReducedProblem<F>,
    config: &SolverConfig<F>,
) -> Result<MaxentSolution<F>> {
    let state = fixed_point_from(start, reduced, config)?;
    let (density, lambda0, lambda) = reconstruct_density(&state, reduced, config.alpha);
    let entropy = density.entropy();
    let (dual_value, _) = dual_value_and_gradient(lambda0, &lambda, reduced, config.alpha)?;
    let residuals = moment_residuals(&density, config.alpha);
    let moment_residual_sup = residuals.iter().fold(F::zero(), |acc, r| acc.max(r.abs()));
    let survivor_mass = density.survivor_mass();
    Ok(MaxentSolution {
        alpha: config.alpha,
        lambda0,
        lambda,
        density,
        entropy,
        dual_value,
        moment_residual_sup,
        survivor_mass,
        iterations: state.iterations,
        final_delta: state.final_delta,
    })
}
