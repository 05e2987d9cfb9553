//! Shared helpers and independent oracles for the integration suites.
//!
//! The primal oracle maximizes entropy directly over the feasible polytope of
//! piecewise-constant densities (nullspace parametrization plus refined grid
//! search); it never touches the dual fixed-point machinery it validates.

// Each test binary compiles this module separately and uses a subset of it.
#![allow(dead_code)]

use accim_core::*;
use nalgebra::{DMatrix, DVector};

pub fn tent_reduced(resolution: usize) -> (OverlapData, ReducedProblem) {
    let tent = maps::tent3::<f64>();
    let grid = GridPartition::new(tent.domain().clone(), vec![resolution]).unwrap();
    let overlap = compute_overlap(&tent, &grid, Backend::Exact).unwrap();
    let reduced = reduce_domain(&overlap).unwrap();
    (overlap, reduced)
}

pub fn saddle_parts(resolution: usize) -> (GridPartition, OverlapData, ReducedProblem) {
    let saddle = maps::saddle::<f64>();
    let grid = GridPartition::new(saddle.domain().clone(), vec![resolution, resolution]).unwrap();
    let overlap = compute_overlap(&saddle, &grid, Backend::Exact).unwrap();
    let reduced = reduce_domain(&overlap).unwrap();
    (grid, overlap, reduced)
}

/// One scalar unknown of the primal problem: a density value on either a
/// survivor piece `(cell, target)` or a hole piece.
struct Piece {
    cell: usize,
    target: Option<usize>,
    weight: f64,
}

fn pieces_of(reduced: &ReducedProblem) -> Vec<Piece> {
    let mut pieces: Vec<Piece> = reduced
        .matrix()
        .iter()
        .map(|(k, j, w)| Piece {
            cell: k,
            target: Some(j),
            weight: w,
        })
        .collect();
    for (k, &w) in reduced.hole().iter().enumerate() {
        if w > 0.0 {
            pieces.push(Piece {
                cell: k,
                target: None,
                weight: w,
            });
        }
    }
    pieces
}

fn entropy_of(values: &[f64], pieces: &[Piece]) -> f64 {
    values
        .iter()
        .zip(pieces)
        .map(|(&v, p)| if v > 0.0 { -v * v.ln() * p.weight } else { 0.0 })
        .sum()
}

/// Brute-force maximum of the entropy over all nonnegative piecewise-constant
/// densities satisfying unit mass, survivor mass `alpha` and the per-cell
/// conditional-invariance conditions. Only meant for a handful of unknowns.
pub fn primal_entropy_max(reduced: &ReducedProblem, alpha: f64) -> f64 {
    let pieces = pieces_of(reduced);
    let vars = pieces.len();
    let n = reduced.n();
    assert!(
        vars <= 12,
        "oracle is for tiny instances (got {vars} unknowns)"
    );

    // Equality constraints A z = b.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    rows.push(pieces.iter().map(|p| p.weight).collect());
    rhs.push(1.0);
    rows.push(
        pieces
            .iter()
            .map(|p| if p.target.is_some() { p.weight } else { 0.0 })
            .collect(),
    );
    rhs.push(alpha);
    for j in 0..n {
        let mut row = vec![0.0; vars];
        let mut nontrivial = false;
        for (idx, p) in pieces.iter().enumerate() {
            if p.target == Some(j) {
                row[idx] += p.weight;
                nontrivial = true;
            }
            if p.cell == j {
                row[idx] -= alpha * p.weight;
                nontrivial = true;
            }
        }
        if nontrivial {
            rows.push(row);
            rhs.push(0.0);
        }
    }

    let m = rows.len();
    let a = DMatrix::from_fn(m, vars, |r, c| rows[r][c]);
    let b = DVector::from_vec(rhs);

    // Feasible anchor: min-norm correction of the all-ones vector.
    let ones = DVector::from_element(vars, 1.0);
    let svd = a.clone().svd(true, true);
    let correction = svd
        .solve(&(b.clone() - &a * &ones), 1e-12)
        .expect("least-squares solve");
    let anchor = ones + correction;
    let residual = (&a * &anchor - &b).norm();
    assert!(residual < 1e-9, "anchor infeasible: residual {residual:e}");
    assert!(
        anchor.iter().all(|&z| z > 1e-9),
        "anchor not interior: {anchor:?}"
    );

    // Orthonormal nullspace basis from the projector I - V_r V_r^T.
    let v_t = svd.v_t.as_ref().expect("thin SVD computed");
    let mut projector = DMatrix::<f64>::identity(vars, vars);
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > 1e-10 {
            let v = v_t.row(i).transpose();
            projector -= &v * v.transpose();
        }
    }
    let eigen = projector.symmetric_eigen();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for (i, &value) in eigen.eigenvalues.iter().enumerate() {
        if value > 0.5 {
            basis.push(eigen.eigenvectors.column(i).into_owned());
        }
    }
    let dim = basis.len();

    let eval = |coords: &[f64]| -> f64 {
        let mut z = anchor.clone();
        for (c, v) in coords.iter().zip(&basis) {
            z += v * *c;
        }
        if z.iter().any(|&zi| zi < 0.0) {
            return f64::NEG_INFINITY;
        }
        entropy_of(z.as_slice(), &pieces)
    };

    if dim == 0 {
        return eval(&[]);
    }

    // Coarse-to-fine grid search around the anchor.
    let mut center = vec![0.0; dim];
    let mut radius = 8.0;
    let mut best = eval(&center);
    let steps = 20i64;
    for _ in 0..8 {
        let mut best_coords = center.clone();
        let mut counters = vec![-steps; dim];
        'grid: loop {
            let coords: Vec<f64> = counters
                .iter()
                .zip(&center)
                .map(|(&c, &mid)| mid + radius * c as f64 / steps as f64)
                .collect();
            let h = eval(&coords);
            if h > best {
                best = h;
                best_coords = coords;
            }
            let mut d = dim;
            loop {
                if d == 0 {
                    break 'grid;
                }
                d -= 1;
                if counters[d] < steps {
                    counters[d] += 1;
                    break;
                }
                counters[d] = -steps;
            }
        }
        center = best_coords;
        radius *= 0.2;
    }
    best
}

/// Central finite differences of the dual objective.
pub fn finite_difference_gradient(
    reduced: &ReducedProblem,
    alpha: f64,
    lambda0: f64,
    lambda: &[f64],
    h: f64,
) -> Vec<f64> {
    let eval = |l0: f64, l: &[f64]| dual_value_and_gradient(l0, l, reduced, alpha).unwrap().0;
    let mut grad = Vec::with_capacity(lambda.len() + 1);
    grad.push((eval(lambda0 + h, lambda) - eval(lambda0 - h, lambda)) / (2.0 * h));
    for i in 0..lambda.len() {
        let mut up = lambda.to_vec();
        up[i] += h;
        let mut down = lambda.to_vec();
        down[i] -= h;
        grad.push((eval(lambda0, &up) - eval(lambda0, &down)) / (2.0 * h));
    }
    grad
}
