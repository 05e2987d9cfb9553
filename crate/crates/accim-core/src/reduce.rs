//! Reachability-based domain reduction.
//!
//! A cell is kept iff it lies on a cycle of the overlap graph or is forward
//! reachable from one. Dropping the rest removes every test-function
//! combination that would make the dual optimization unbounded, so the
//! reduced dual attains its maximum. The criterion uses only the nonzero
//! pattern of `C`, so one reduction serves every escape-rate parameter.

use crate::error::{Error, Result};
use crate::overlap::OverlapData;
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

/// Overlap data restricted to the kept cells. Rows, columns and hole entries
/// of dropped cells are zeroed; cell masses are kept as-is for exports.
#[derive(Debug, Clone)]
pub struct ReducedProblem<F = f64> {
    keep: Vec<bool>,
    kept_count: usize,
    matrix: SparseMatrix<F>,
    hole: Vec<F>,
    cell_mass: Vec<F>,
}

impl<F: Scalar> ReducedProblem<F> {
    /// Diagnostic hook that skips the reduction and keeps every cell.
    /// Solving such a problem is expected to fail with dual divergence
    /// whenever the reduction would have dropped anything.
    pub fn unreduced(overlap: &OverlapData<F>) -> Self {
        Self {
            keep: vec![true; overlap.n()],
            kept_count: overlap.n(),
            matrix: overlap.matrix().clone(),
            hole: overlap.hole().to_vec(),
            cell_mass: overlap.cell_mass().to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.keep.len()
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn kept_count(&self) -> usize {
        self.kept_count
    }

    pub fn matrix(&self) -> &SparseMatrix<F> {
        &self.matrix
    }

    pub fn hole(&self) -> &[F] {
        &self.hole
    }

    pub fn cell_mass(&self) -> &[F] {
        &self.cell_mass
    }
}

/// Strongly connected components of the directed graph on `0..n` with an edge
/// `k -> j` per nonzero `C[k][j]`. Iterative Tarjan; returns the component id
/// of every node and the component sizes.
fn strongly_connected_components<F: Scalar>(matrix: &SparseMatrix<F>) -> (Vec<usize>, Vec<usize>) {
    let n = matrix.n();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comp_of = vec![usize::MAX; n];
    let mut comp_sizes: Vec<usize> = Vec::new();
    let mut next_index = 0usize;

    // Explicit call stack of (node, position in its edge list).
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            let (cols, _) = matrix.row(v);
            if *edge < cols.len() {
                let w = cols[*edge];
                *edge += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let id = comp_sizes.len();
                    let mut size = 0usize;
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp_of[w] = id;
                        size += 1;
                        if w == v {
                            break;
                        }
                    }
                    comp_sizes.push(size);
                }
            }
        }
    }
    (comp_of, comp_sizes)
}

/// Computes the kept-cell mask and the masked overlap data.
///
/// A cell is cyclic when its component has size at least two or it carries a
/// self-loop; the kept set is the forward closure of the cyclic cells.
pub fn reduce_domain<F: Scalar>(overlap: &OverlapData<F>) -> Result<ReducedProblem<F>> {
    let n = overlap.n();
    let matrix = overlap.matrix();
    let (comp_of, comp_sizes) = strongly_connected_components(matrix);

    let mut keep = vec![false; n];
    let mut frontier: Vec<usize> = Vec::new();
    for v in 0..n {
        let cyclic = comp_sizes[comp_of[v]] >= 2 || matrix.get(v, v) > F::zero();
        if cyclic {
            keep[v] = true;
            frontier.push(v);
        }
    }
    while let Some(v) = frontier.pop() {
        let (cols, _) = matrix.row(v);
        for &w in cols {
            if !keep[w] {
                keep[w] = true;
                frontier.push(w);
            }
        }
    }

    let kept_count = keep.iter().filter(|&&k| k).count();
    if kept_count == 0 {
        return Err(Error::EmptyReducedDomain);
    }

    let masked = matrix.masked(&keep);
    let hole = overlap
        .hole()
        .iter()
        .enumerate()
        .map(|(k, &c)| if keep[k] { c } else { F::zero() })
        .collect();

    Ok(ReducedProblem {
        keep,
        kept_count,
        matrix: masked,
        hole,
        cell_mass: overlap.cell_mass().to_vec(),
    })
}

/// Dense transitive closure (path length >= 1) of the overlap graph.
/// Brute-force validation aid for small `n`.
pub fn reachability_closure<F: Scalar>(overlap: &OverlapData<F>) -> Vec<Vec<bool>> {
    let n = overlap.n();
    assert!(n <= 200, "dense closure oracle is meant for small n");
    let mut reach = vec![vec![false; n]; n];
    for (i, j, _) in overlap.matrix().iter() {
        reach[i][j] = true;
    }
    for mid in 0..n {
        let via = reach[mid].clone();
        for row in reach.iter_mut() {
            if row[mid] {
                for (entry, &hit) in row.iter_mut().zip(&via) {
                    *entry = *entry || hit;
                }
            }
        }
    }
    reach
}

/// True iff some positive power of the adjacency pattern connects `from` to
/// `to`.
pub fn reachability_oracle<F: Scalar>(overlap: &OverlapData<F>, from: usize, to: usize) -> bool {
    reachability_closure(overlap)[from][to]
}
