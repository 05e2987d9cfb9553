//! Dual objective, gradient and moment residuals.

use crate::density::PiecewiseDensity;
use crate::error::{Error, Result};
use crate::reduce::ReducedProblem;
use crate::scalar::Scalar;

/// Evaluates the reduced dual objective
///
/// ```text
/// Q(l) = a l_0 - sum_{kj} exp(l_0 - 1 + l_j - a l_k) C[k][j]
///              - sum_k  exp(-1 - a l_k) c[k]
/// ```
///
/// and its exact gradient with respect to `(l_0, l_1, ..., l_n)`.
pub fn dual_value_and_gradient<F: Scalar>(
    lambda0: F,
    lambda: &[F],
    reduced: &ReducedProblem<F>,
    alpha: F,
) -> Result<(F, Vec<F>)> {
    let n = reduced.n();
    debug_assert_eq!(lambda.len(), n);
    let one = F::one();
    let overflow = |what: &str| Error::DualDivergence {
        iteration: 0,
        detail: format!("overflow in dual exponentials ({what})"),
    };

    let mut value = alpha * lambda0;
    let mut grad = vec![F::zero(); n + 1];
    grad[0] = alpha;

    for (k, j, weight) in reduced.matrix().iter() {
        let term = (lambda0 - one + lambda[j] - alpha * lambda[k]).exp() * weight;
        if !term.is_finite() {
            return Err(overflow("survivor term"));
        }
        value = value - term;
        grad[0] = grad[0] - term;
        grad[1 + j] = grad[1 + j] - term;
        grad[1 + k] = grad[1 + k] + alpha * term;
    }
    for (k, &weight) in reduced.hole().iter().enumerate() {
        if weight == F::zero() {
            continue;
        }
        let term = (-one - alpha * lambda[k]).exp() * weight;
        if !term.is_finite() {
            return Err(overflow("hole term"));
        }
        value = value - term;
        grad[1 + k] = grad[1 + k] + alpha * term;
    }
    Ok((value, grad))
}

/// Discretized conditional-invariance residuals: for each cell `j`, the mass
/// flowing into `B_j` minus `alpha` times the mass sitting on `B_j`. All
/// vanish at an exactly conditionally invariant density.
pub fn moment_residuals<F: Scalar>(density: &PiecewiseDensity<F>, alpha: F) -> Vec<F> {
    let n = density.n();
    let mut incoming = vec![F::zero(); n];
    for p in &density.survivor {
        incoming[p.target] = incoming[p.target] + p.value * p.weight;
    }
    let on_cell = density.cell_masses();
    (0..n).map(|j| incoming[j] - alpha * on_cell[j]).collect()
}
