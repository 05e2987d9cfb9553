//! Square sparse matrix stored in both row-major and column-major form.
//!
//! The dual fixed point needs row sums of `C x` and column sums of
//! `C^T x^{-alpha}` in every iteration, so both orientations are built once
//! and kept immutable.

use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct SparseMatrix<F = f64> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    row_val: Vec<F>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    col_val: Vec<F>,
}

impl<F: Scalar> SparseMatrix<F> {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros discarded.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, F)>) -> Self {
        for &(r, c, _) in &triplets {
            assert!(r < n && c < n, "triplet index out of range");
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut merged: Vec<(usize, usize, F)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 = last.2 + v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != F::zero());

        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx: Vec<usize> = merged.iter().map(|t| t.1).collect();
        let row_val: Vec<F> = merged.iter().map(|t| t.2).collect();

        let mut col_ptr = vec![0usize; n + 1];
        for &(_, c, _) in &merged {
            col_ptr[c + 1] += 1;
        }
        for i in 0..n {
            col_ptr[i + 1] += col_ptr[i];
        }
        let mut cursor = col_ptr.clone();
        let mut row_idx = vec![0usize; merged.len()];
        let mut col_val = vec![F::zero(); merged.len()];
        for &(r, c, v) in &merged {
            let slot = cursor[c];
            row_idx[slot] = r;
            col_val[slot] = v;
            cursor[c] += 1;
        }

        Self {
            n,
            row_ptr,
            col_idx,
            row_val,
            col_ptr,
            row_idx,
            col_val,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_val.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[F]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.row_val[span])
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[F]) {
        let span = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[span.clone()], &self.col_val[span])
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn col_nnz(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => F::zero(),
        }
    }

    pub fn row_sum(&self, i: usize) -> F {
        self.row(i).1.iter().copied().sum()
    }

    pub fn col_sum(&self, j: usize) -> F {
        self.col(j).1.iter().copied().sum()
    }

    /// Iterates `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, F)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Copy with every entry outside `keep x keep` removed.
    pub fn masked(&self, keep: &[bool]) -> SparseMatrix<F> {
        let triplets = self
            .iter()
            .filter(|&(i, j, _)| keep[i] && keep[j])
            .collect();
        SparseMatrix::from_triplets(self.n, triplets)
    }
}
