//! Overlap masses between grid cells and their preimages.
//!
//! `C[k][j]` is the Lebesgue mass of `B_k ∩ T^{-1} B_j` and `c[k]` the mass of
//! the part of `B_k` escaping in one step. Together with the cell masses this
//! is the only dynamical input the dual optimization sees; it is the same data
//! Ulam-style transfer operator discretizations use.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::GridPartition;
use crate::scalar::{real, Scalar};
use crate::sparse::SparseMatrix;
use crate::system::OpenSystem;

/// Relative threshold below which overlap entries are treated as rounding
/// crud and dropped. Keeping them would put spurious edges in the
/// reachability graph.
const ENTRY_DROP_REL: f64 = 1e-15;

/// How the overlap masses are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Exact box geometry; available because branches are diagonal-affine.
    Exact,
    /// Stratified jittered sampling, deterministic for a fixed seed.
    /// `samples_per_cell` is rounded to a per-axis grid (see `realized_samples`).
    Sampled { samples_per_cell: usize, seed: u64 },
}

/// Backend actually used, as recorded in the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendTag {
    Exact,
    Sampled {
        samples_per_cell: usize,
        seed: u64,
        /// Sample points that fell outside every branch domain; they count
        /// as escaped.
        undefined_points: usize,
    },
}

/// Number of samples per cell actually drawn for a request of
/// `samples_per_cell` in dimension `dim`: the largest per-axis stratification
/// `q^dim` with `q = round(samples_per_cell^(1/dim))`.
pub fn realized_samples(samples_per_cell: usize, dim: usize) -> usize {
    let q = (samples_per_cell as f64)
        .powf(1.0 / dim as f64)
        .round()
        .max(1.0) as usize;
    q.pow(dim as u32)
}

/// Sparse overlap matrix, hole vector and cell masses for one partition.
#[derive(Debug, Clone)]
pub struct OverlapData<F = f64> {
    n: usize,
    matrix: SparseMatrix<F>,
    hole: Vec<F>,
    cell_mass: Vec<F>,
    tag: BackendTag,
}

impl<F: Scalar> OverlapData<F> {
    /// Assembles overlap data from raw parts, checking nonnegativity and the
    /// row identity `sum_j C[k][j] + c[k] = cell_mass[k]`.
    pub fn from_parts(
        n: usize,
        triplets: Vec<(usize, usize, F)>,
        hole: Vec<F>,
        cell_mass: Vec<F>,
        tag: BackendTag,
    ) -> Result<Self> {
        if hole.len() != n || cell_mass.len() != n {
            return Err(Error::InvalidConfig(
                "hole and cell mass vectors must have length n".into(),
            ));
        }
        if triplets.iter().any(|&(_, _, v)| v < F::zero())
            || hole.iter().any(|&v| v < F::zero())
            || cell_mass.iter().any(|&v| v < F::zero())
        {
            return Err(Error::InvalidConfig(
                "overlap data must be nonnegative".into(),
            ));
        }
        let matrix = SparseMatrix::from_triplets(n, triplets);
        let data = Self {
            n,
            matrix,
            hole,
            cell_mass,
            tag,
        };
        let tol = real::<F>(1e-12).max(F::epsilon() * real(64.0));
        for k in 0..n {
            let residual = (data.matrix.row_sum(k) + data.hole[k] - data.cell_mass[k]).abs();
            if residual > tol * data.cell_mass[k].max(F::one()) {
                return Err(Error::InvalidConfig(format!(
                    "row identity violated at cell {k}: residual {residual:e}"
                )));
            }
        }
        Ok(data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &SparseMatrix<F> {
        &self.matrix
    }

    /// Mass of `B_k` escaping in one step.
    pub fn hole(&self) -> &[F] {
        &self.hole
    }

    pub fn cell_mass(&self) -> &[F] {
        &self.cell_mass
    }

    pub fn backend(&self) -> &BackendTag {
        &self.tag
    }
}

/// Computes overlap masses for a system on a grid partition.
pub fn compute_overlap<F: Scalar>(
    system: &OpenSystem<F>,
    partition: &GridPartition<F>,
    backend: Backend,
) -> Result<OverlapData<F>> {
    if system.domain() != partition.domain() {
        return Err(Error::InvalidConfig(
            "partition domain differs from the system domain".into(),
        ));
    }
    match backend {
        Backend::Exact => compute_exact(system, partition),
        Backend::Sampled {
            samples_per_cell,
            seed,
        } => compute_sampled(system, partition, samples_per_cell, seed),
    }
}

struct RowResult<F> {
    entries: Vec<(usize, F)>,
    hole: F,
    undefined: usize,
}

fn assemble<F: Scalar>(
    n: usize,
    rows: Vec<RowResult<F>>,
    cell_mass: Vec<F>,
    tag: BackendTag,
) -> OverlapData<F> {
    let mut triplets = Vec::new();
    let mut hole = Vec::with_capacity(n);
    for (k, row) in rows.into_iter().enumerate() {
        for (j, v) in row.entries {
            triplets.push((k, j, v));
        }
        hole.push(row.hole);
    }
    OverlapData {
        n,
        matrix: SparseMatrix::from_triplets(n, triplets),
        hole,
        cell_mass,
        tag,
    }
}

fn compute_exact<F: Scalar>(
    system: &OpenSystem<F>,
    partition: &GridPartition<F>,
) -> Result<OverlapData<F>> {
    let n = partition.n();
    let dim = partition.dim();
    let cell_mass = partition.cell_masses();

    let rows: Vec<RowResult<F>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let source = partition.cell_box(k);
            let mut acc: Vec<(usize, F)> = Vec::new();
            for branch in system.branches() {
                let clipped = match source.intersect(branch.domain()) {
                    Some(b) => b,
                    None => continue,
                };
                // Candidate targets are the cells met by the image box.
                let image = branch.image_box(&clipped);
                let spans: Option<Vec<(usize, usize)>> = (0..dim)
                    .map(|d| partition.index_span(d, image.lower()[d], image.upper()[d]))
                    .collect();
                let spans = match spans {
                    Some(s) => s,
                    None => continue,
                };
                let mut multi: Vec<usize> = spans.iter().map(|s| s.0).collect();
                'cells: loop {
                    let j = partition.multi_to_flat(&multi);
                    if let Some(pre) = branch.preimage_box(&partition.cell_box(j)) {
                        if let Some(piece) = pre.intersect(&source) {
                            acc.push((j, piece.measure()));
                        }
                    }
                    for d in (0..dim).rev() {
                        if multi[d] < spans[d].1 {
                            multi[d] += 1;
                            break;
                        }
                        if d == 0 {
                            break 'cells;
                        }
                        multi[d] = spans[d].0;
                    }
                }
            }
            finish_row(acc, cell_mass[k])
        })
        .collect();

    Ok(assemble(n, rows, cell_mass, BackendTag::Exact))
}

fn finish_row<F: Scalar>(mut acc: Vec<(usize, F)>, mass: F) -> RowResult<F> {
    acc.sort_by_key(|e| e.0);
    let mut entries: Vec<(usize, F)> = Vec::with_capacity(acc.len());
    for (j, v) in acc {
        match entries.last_mut() {
            Some(last) if last.0 == j => last.1 = last.1 + v,
            _ => entries.push((j, v)),
        }
    }
    let floor = real::<F>(ENTRY_DROP_REL) * mass;
    entries.retain(|&(_, v)| v >= floor);
    let row_sum: F = entries.iter().map(|e| e.1).sum();
    RowResult {
        entries,
        hole: (mass - row_sum).max(F::zero()),
        undefined: 0,
    }
}

fn compute_sampled<F: Scalar>(
    system: &OpenSystem<F>,
    partition: &GridPartition<F>,
    samples_per_cell: usize,
    seed: u64,
) -> Result<OverlapData<F>> {
    if samples_per_cell == 0 {
        return Err(Error::InvalidConfig(
            "sampled backend needs at least one sample per cell".into(),
        ));
    }
    let n = partition.n();
    let dim = partition.dim();
    let cell_mass = partition.cell_masses();
    let strata_per_axis = (samples_per_cell as f64)
        .powf(1.0 / dim as f64)
        .round()
        .max(1.0) as usize;
    let total = strata_per_axis.pow(dim as u32);
    let total_f = F::from_usize(total).unwrap();

    let rows: Vec<RowResult<F>> = (0..n)
        .into_par_iter()
        .map(|k| {
            // Per-cell stream keeps the result independent of scheduling.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let cell = partition.cell_box(k);
            let strata_width: Vec<F> = (0..dim)
                .map(|d| {
                    (cell.upper()[d] - cell.lower()[d]) / F::from_usize(strata_per_axis).unwrap()
                })
                .collect();
            let mut counts: Vec<(usize, usize)> = Vec::new();
            let mut escaped = 0usize;
            let mut undefined = 0usize;
            let mut stratum = vec![0usize; dim];
            loop {
                let point: Vec<F> = (0..dim)
                    .map(|d| {
                        let jitter = real::<F>(rng.gen::<f64>());
                        cell.lower()[d]
                            + (F::from_usize(stratum[d]).unwrap() + jitter) * strata_width[d]
                    })
                    .collect();
                match system.branch_containing(&point) {
                    None => undefined += 1,
                    Some(branch) => {
                        let image = branch.apply(&point);
                        if system.domain().contains(&image) {
                            let j = partition.locate(&image);
                            match counts.iter_mut().find(|(cj, _)| *cj == j) {
                                Some((_, c)) => *c += 1,
                                None => counts.push((j, 1)),
                            }
                        } else {
                            escaped += 1;
                        }
                    }
                }
                let mut done = true;
                for d in (0..dim).rev() {
                    if stratum[d] + 1 < strata_per_axis {
                        stratum[d] += 1;
                        done = false;
                        break;
                    }
                    stratum[d] = 0;
                }
                if done {
                    break;
                }
            }
            let mass = cell_mass[k];
            let entries = counts
                .into_iter()
                .map(|(j, c)| (j, mass * F::from_usize(c).unwrap() / total_f))
                .collect();
            RowResult {
                entries,
                hole: mass * F::from_usize(escaped + undefined).unwrap() / total_f,
                undefined,
            }
        })
        .collect();

    let undefined_points = rows.iter().map(|r| r.undefined).sum();
    Ok(assemble(
        n,
        rows,
        cell_mass,
        BackendTag::Sampled {
            samples_per_cell: total,
            seed,
            undefined_points,
        },
    ))
}

/// Hole masses computed from branch geometry instead of row residuals;
/// cross-checks the exact backend.
pub fn hole_masses_geometric<F: Scalar>(
    system: &OpenSystem<F>,
    partition: &GridPartition<F>,
) -> Vec<F> {
    (0..partition.n())
        .map(|k| {
            let cell = partition.cell_box(k);
            let mut escaping = F::zero();
            for branch in system.branches() {
                let clipped = match cell.intersect(branch.domain()) {
                    Some(b) => b,
                    None => continue,
                };
                let staying = branch
                    .preimage_box(system.domain())
                    .and_then(|pre| pre.intersect(&clipped))
                    .map(|b| b.measure())
                    .unwrap_or(F::zero());
                escaping = escaping + (clipped.measure() - staying).max(F::zero());
            }
            escaping
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps;
    use crate::system::{AffineBranch, DomainBox};

    fn grid_for<F: Scalar>(system: &OpenSystem<F>, resolution: Vec<usize>) -> GridPartition<F> {
        GridPartition::new(system.domain().clone(), resolution).unwrap()
    }

    fn identity_map(resolution: usize) -> (OpenSystem<f64>, GridPartition<f64>) {
        let domain = DomainBox::new(vec![0.0], vec![1.0]).unwrap();
        let branch = AffineBranch::new(domain.clone(), vec![1.0], vec![0.0]).unwrap();
        let system = OpenSystem::new(domain, vec![branch]).unwrap();
        let grid = grid_for(&system, vec![resolution]);
        (system, grid)
    }

    #[test]
    fn tent_resolution_three_matches_hand_computation() {
        let tent = maps::tent3::<f64>();
        let grid = grid_for(&tent, vec![3]);
        let data = compute_overlap(&tent, &grid, Backend::Exact).unwrap();
        let ninth = 1.0 / 9.0;
        for j in 0..3 {
            assert!((data.matrix().get(0, j) - ninth).abs() < 1e-15);
            assert_eq!(data.matrix().get(1, j), 0.0);
            assert!((data.matrix().get(2, j) - ninth).abs() < 1e-15);
        }
        assert_eq!(data.hole()[0], 0.0);
        assert!((data.hole()[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(data.hole()[2], 0.0);
    }

    #[test]
    fn identity_map_is_diagonal() {
        let (system, grid) = identity_map(4);
        let data = compute_overlap(&system, &grid, Backend::Exact).unwrap();
        assert_eq!(data.matrix().nnz(), 4);
        for k in 0..4 {
            assert_eq!(data.matrix().get(k, k), 0.25);
            assert_eq!(data.hole()[k], 0.0);
        }
    }

    #[test]
    fn saddle_two_by_two_quadrants() {
        let saddle = maps::saddle::<f64>();
        let grid = grid_for(&saddle, vec![2, 2]);
        let data = compute_overlap(&saddle, &grid, Backend::Exact).unwrap();
        for k in 0..4 {
            for j in 0..4 {
                let expected = if k == j { 0.5 } else { 0.0 };
                assert_eq!(data.matrix().get(k, j), expected, "entry ({k},{j})");
            }
            assert_eq!(data.hole()[k], 0.5);
        }
    }

    #[test]
    fn row_identity_holds() {
        let tent = maps::tent3::<f64>();
        for res in [3usize, 10, 100, 999] {
            let grid = grid_for(&tent, vec![res]);
            let data = compute_overlap(&tent, &grid, Backend::Exact).unwrap();
            for k in 0..data.n() {
                let residual =
                    (data.matrix().row_sum(k) + data.hole()[k] - data.cell_mass()[k]).abs();
                assert!(residual <= 1e-12, "row {k} residual {residual:e}");
            }
        }
    }

    #[test]
    fn refinement_aggregates_consistently() {
        let tent = maps::tent3::<f64>();
        let coarse = compute_overlap(&tent, &grid_for(&tent, vec![3]), Backend::Exact).unwrap();
        let fine = compute_overlap(&tent, &grid_for(&tent, vec![9]), Backend::Exact).unwrap();
        for kc in 0..3 {
            for jc in 0..3 {
                let mut aggregated = 0.0;
                for kf in 3 * kc..3 * (kc + 1) {
                    for jf in 3 * jc..3 * (jc + 1) {
                        aggregated += fine.matrix().get(kf, jf);
                    }
                }
                assert!(
                    (aggregated - coarse.matrix().get(kc, jc)).abs() < 1e-12,
                    "block ({kc},{jc})"
                );
            }
        }
    }

    #[test]
    fn tent_rows_stay_sparse() {
        let tent = maps::tent3::<f64>();
        for res in [10usize, 100, 1000] {
            let grid = grid_for(&tent, vec![res]);
            let data = compute_overlap(&tent, &grid, Backend::Exact).unwrap();
            let bound = res.div_ceil(3) + 2;
            for k in 0..res {
                assert!(data.matrix().row_nnz(k) <= bound);
            }
        }
    }

    #[test]
    fn geometric_hole_masses_agree_with_row_residuals() {
        for (system, resolution) in [
            (maps::tent3::<f64>(), vec![7]),
            (maps::saddle::<f64>(), vec![10, 10]),
        ] {
            let grid = GridPartition::new(system.domain().clone(), resolution).unwrap();
            let data = compute_overlap(&system, &grid, Backend::Exact).unwrap();
            let geometric = hole_masses_geometric(&system, &grid);
            for (k, (g, h)) in geometric.iter().zip(data.hole()).enumerate() {
                assert!(
                    (g - h).abs() < 1e-12,
                    "cell {k}: geometric {g} vs residual {h}"
                );
            }
        }
    }

    #[test]
    fn sampled_backend_is_deterministic_and_consistent() {
        let tent = maps::tent3::<f64>();
        let grid = grid_for(&tent, vec![5]);
        let backend = Backend::Sampled {
            samples_per_cell: 400,
            seed: 7,
        };
        let a = compute_overlap(&tent, &grid, backend).unwrap();
        let b = compute_overlap(&tent, &grid, backend).unwrap();
        assert_eq!(a.matrix().nnz(), b.matrix().nnz());
        for (ea, eb) in a.matrix().iter().zip(b.matrix().iter()) {
            assert_eq!(ea, eb);
        }
        // Row identity is exact by construction for the sampling backend.
        for k in 0..a.n() {
            let residual = (a.matrix().row_sum(k) + a.hole()[k] - a.cell_mass()[k]).abs();
            assert!(residual < 1e-15);
        }
        match a.backend() {
            BackendTag::Sampled {
                samples_per_cell, ..
            } => assert_eq!(*samples_per_cell, 400),
            _ => panic!("expected sampled tag"),
        }
    }

    #[test]
    fn sampled_matches_exact_within_monte_carlo_error() {
        let tent = maps::tent3::<f64>();
        let grid = grid_for(&tent, vec![10]);
        let exact = compute_overlap(&tent, &grid, Backend::Exact).unwrap();
        let sampled = compute_overlap(
            &tent,
            &grid,
            Backend::Sampled {
                samples_per_cell: 10_000,
                seed: 42,
            },
        )
        .unwrap();
        let cell_mass = 0.1;
        let bound = 3.0 * cell_mass / (10_000f64).sqrt();
        let mut checked = 0usize;
        let mut within = 0usize;
        for (k, j, v) in exact.matrix().iter() {
            checked += 1;
            if (v - sampled.matrix().get(k, j)).abs() <= bound {
                within += 1;
            }
        }
        assert!(checked > 0);
        assert!(
            within as f64 >= 0.99 * checked as f64,
            "{within}/{checked} entries within bound"
        );
    }

    #[test]
    fn from_parts_rejects_bad_row_identity() {
        let err = OverlapData::from_parts(
            1,
            vec![(0, 0, 0.5)],
            vec![0.0],
            vec![1.0],
            BackendTag::Exact,
        );
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn partition_domain_must_match() {
        let tent = maps::tent3::<f64>();
        let other = DomainBox::new(vec![0.0], vec![2.0]).unwrap();
        let grid = GridPartition::new(other, vec![4]).unwrap();
        assert!(matches!(
            compute_overlap(&tent, &grid, Backend::Exact),
            Err(Error::InvalidConfig(_))
        ));
    }
}
