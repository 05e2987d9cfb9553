//! Piecewise-constant densities on the refined partition.
//!
//! The reconstructed density is constant on every surviving piece
//! `B_k ∩ T^{-1} B_j` and on every hole piece `H_1 ∩ B_k`; each piece stores
//! its value and its reference-measure weight.

use crate::reduce::ReducedProblem;
use crate::scalar::Scalar;
use crate::solver::DualState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivorPiece<F = f64> {
    /// Cell the piece lies in.
    pub source: usize,
    /// Cell its image lies in.
    pub target: usize,
    pub value: F,
    /// Lebesgue mass of the piece.
    pub weight: F,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolePiece<F = f64> {
    pub cell: usize,
    pub value: F,
    pub weight: F,
}

#[derive(Debug, Clone)]
pub struct PiecewiseDensity<F = f64> {
    n: usize,
    pub survivor: Vec<SurvivorPiece<F>>,
    pub hole: Vec<HolePiece<F>>,
    /// Constant that scaled the raw exponential family to unit mass.
    pub normalization: F,
}

impl<F: Scalar> PiecewiseDensity<F> {
    pub fn new(
        n: usize,
        survivor: Vec<SurvivorPiece<F>>,
        hole: Vec<HolePiece<F>>,
        normalization: F,
    ) -> Self {
        Self {
            n,
            survivor,
            hole,
            normalization,
        }
    }

    /// Number of grid cells underlying the refined partition.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total_mass(&self) -> F {
        let surviving: F = self.survivor.iter().map(|p| p.value * p.weight).sum();
        let escaping: F = self.hole.iter().map(|p| p.value * p.weight).sum();
        surviving + escaping
    }

    /// Mass on the one-step survivor set.
    pub fn survivor_mass(&self) -> F {
        self.survivor.iter().map(|p| p.value * p.weight).sum()
    }

    /// Mass per grid cell.
    pub fn cell_masses(&self) -> Vec<F> {
        let mut masses = vec![F::zero(); self.n];
        for p in &self.survivor {
            masses[p.source] = masses[p.source] + p.value * p.weight;
        }
        for p in &self.hole {
            masses[p.cell] = masses[p.cell] + p.value * p.weight;
        }
        masses
    }

    /// Cell-averaged values (cell mass over cell measure), the export format
    /// used for plotting.
    pub fn cell_averages(&self, cell_measure: &[F]) -> Vec<F> {
        self.cell_masses()
            .iter()
            .zip(cell_measure)
            .map(|(&m, &w)| if w > F::zero() { m / w } else { F::zero() })
            .collect()
    }

    /// Smallest and largest density value over pieces with positive weight.
    pub fn value_range(&self) -> (F, F) {
        let mut lo = F::infinity();
        let mut hi = F::neg_infinity();
        for (value, weight) in self
            .survivor
            .iter()
            .map(|p| (p.value, p.weight))
            .chain(self.hole.iter().map(|p| (p.value, p.weight)))
        {
            if weight > F::zero() {
                lo = lo.min(value);
                hi = hi.max(value);
            }
        }
        (lo, hi)
    }

    /// Shannon-Boltzmann entropy `-sum f ln f` over all pieces, with
    /// `0 ln 0 = 0`.
    pub fn entropy(&self) -> F {
        let term = |value: F, weight: F| {
            if value > F::zero() {
                -value * value.ln() * weight
            } else {
                F::zero()
            }
        };
        let surviving: F = self.survivor.iter().map(|p| term(p.value, p.weight)).sum();
        let escaping: F = self.hole.iter().map(|p| term(p.value, p.weight)).sum();
        surviving + escaping
    }

    /// Mass remaining after `0..=steps` applications of the conditional
    /// push-forward induced by the density's own flow proportions. For a
    /// conditionally invariant density the sequence is `alpha^t`.
    pub fn survivor_decay(&self, steps: usize) -> Vec<F> {
        let masses = self.cell_masses();
        let mut current = masses.clone();
        let mut totals = Vec::with_capacity(steps + 1);
        totals.push(current.iter().copied().sum());
        // Fraction of cell k's mass moving to cell j in one step.
        let flows: Vec<(usize, usize, F)> = self
            .survivor
            .iter()
            .filter(|p| masses[p.source] > F::zero())
            .map(|p| (p.source, p.target, p.value * p.weight / masses[p.source]))
            .collect();
        for _ in 0..steps {
            let mut next = vec![F::zero(); self.n];
            for &(k, j, fraction) in &flows {
                next[j] = next[j] + fraction * current[k];
            }
            totals.push(next.iter().copied().sum());
            current = next;
        }
        totals
    }
}

/// Rebuilds the primal density from a converged dual iterate and recovers the
/// multipliers: value `x_j x_k^{-alpha}` on the `(k, j)` survivor piece,
/// `x_k^{-alpha}` on hole piece `k`, scaled to unit total mass. The scale
/// fixes `lambda_0` through `nu = exp(alpha lambda_0 - 1)` and then
/// `lambda_i = ln x_i - lambda_0`.
pub fn reconstruct_density<F: Scalar>(
    state: &DualState<F>,
    reduced: &ReducedProblem<F>,
    alpha: F,
) -> (PiecewiseDensity<F>, F, Vec<F>) {
    let xneg: Vec<F> = state.x.iter().map(|&v| v.powf(-alpha)).collect();

    let mut survivor = Vec::with_capacity(reduced.matrix().nnz());
    let mut raw_mass = F::zero();
    for (k, j, weight) in reduced.matrix().iter() {
        let value = state.x[j] * xneg[k];
        raw_mass = raw_mass + value * weight;
        survivor.push(SurvivorPiece {
            source: k,
            target: j,
            value,
            weight,
        });
    }
    let mut hole = Vec::new();
    for (k, &weight) in reduced.hole().iter().enumerate() {
        if weight > F::zero() {
            raw_mass = raw_mass + xneg[k] * weight;
            hole.push(HolePiece {
                cell: k,
                value: xneg[k],
                weight,
            });
        }
    }

    let normalization = F::one() / raw_mass;
    for piece in &mut survivor {
        piece.value = piece.value * normalization;
    }
    for piece in &mut hole {
        piece.value = piece.value * normalization;
    }

    let lambda0 = (F::one() + normalization.ln()) / alpha;
    let lambda = state.x.iter().map(|&v| v.ln() - lambda0).collect();
    (
        PiecewiseDensity::new(reduced.n(), survivor, hole, normalization),
        lambda0,
        lambda,
    )
}
