//! Uniform grid partitions inducing the indicator test functions.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::system::DomainBox;

/// A uniform axis-aligned grid over a domain box. Cell `k` carries the test
/// function `1_{B_k}`; the cells tile the domain exactly (the outermost
/// boundaries are the domain bounds themselves, not accumulated widths).
#[derive(Debug, Clone)]
pub struct GridPartition<F = f64> {
    domain: DomainBox<F>,
    resolution: Vec<usize>,
    widths: Vec<F>,
    n: usize,
}

impl<F: Scalar> GridPartition<F> {
    pub fn new(domain: DomainBox<F>, resolution: Vec<usize>) -> Result<Self> {
        if resolution.len() != domain.dim() {
            return Err(Error::InvalidConfig(format!(
                "resolution has {} entries for a {}-dimensional domain",
                resolution.len(),
                domain.dim()
            )));
        }
        if resolution.contains(&0) {
            return Err(Error::InvalidConfig(
                "per-coordinate cell counts must be at least 1".into(),
            ));
        }
        let widths = (0..domain.dim())
            .map(|d| {
                (domain.upper()[d] - domain.lower()[d]) / F::from_usize(resolution[d]).unwrap()
            })
            .collect();
        let n = resolution.iter().product();
        Ok(Self {
            domain,
            resolution,
            widths,
            n,
        })
    }

    pub fn domain(&self) -> &DomainBox<F> {
        &self.domain
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Total cell count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The `i`-th grid line along coordinate `d`. The last line is the domain
    /// bound itself so that cell measures telescope exactly.
    pub fn boundary(&self, d: usize, i: usize) -> F {
        if i == self.resolution[d] {
            self.domain.upper()[d]
        } else {
            self.domain.lower()[d] + F::from_usize(i).unwrap() * self.widths[d]
        }
    }

    /// Row-major flattening; the last coordinate varies fastest.
    pub fn multi_to_flat(&self, multi: &[usize]) -> usize {
        self.resolution
            .iter()
            .zip(multi)
            .fold(0, |flat, (&res, &i)| flat * res + i)
    }

    pub fn flat_to_multi(&self, flat: usize) -> Vec<usize> {
        let mut multi = vec![0; self.dim()];
        let mut rest = flat;
        for d in (0..self.dim()).rev() {
            multi[d] = rest % self.resolution[d];
            rest /= self.resolution[d];
        }
        multi
    }

    pub fn cell_box(&self, flat: usize) -> DomainBox<F> {
        let multi = self.flat_to_multi(flat);
        let lower = (0..self.dim())
            .map(|d| self.boundary(d, multi[d]))
            .collect();
        let upper = (0..self.dim())
            .map(|d| self.boundary(d, multi[d] + 1))
            .collect();
        DomainBox::new(lower, upper).expect("grid cells are non-degenerate")
    }

    pub fn cell_mass(&self, flat: usize) -> F {
        self.cell_box(flat).measure()
    }

    pub fn cell_masses(&self) -> Vec<F> {
        (0..self.n).map(|k| self.cell_mass(k)).collect()
    }

    pub fn cell_center(&self, flat: usize) -> Vec<F> {
        let multi = self.flat_to_multi(flat);
        (0..self.dim())
            .map(|d| {
                let lo = self.boundary(d, multi[d]);
                let hi = self.boundary(d, multi[d] + 1);
                (lo + hi) / F::from_usize(2).unwrap()
            })
            .collect()
    }

    /// Flat index of the cell containing `point`, clamped onto the grid.
    pub fn locate(&self, point: &[F]) -> usize {
        let multi: Vec<usize> = (0..self.dim())
            .map(|d| {
                let rel = (point[d] - self.domain.lower()[d]) / self.widths[d];
                let idx = rel.floor().to_usize().unwrap_or(0);
                idx.min(self.resolution[d] - 1)
            })
            .collect();
        self.multi_to_flat(&multi)
    }

    /// Inclusive index span of cells along coordinate `d` meeting `[lo, hi]`,
    /// or `None` when the interval misses the domain.
    pub fn index_span(&self, d: usize, lo: F, hi: F) -> Option<(usize, usize)> {
        if hi <= self.domain.lower()[d] || lo >= self.domain.upper()[d] {
            return None;
        }
        let res = self.resolution[d];
        let to_idx = |x: F| -> usize {
            let rel = (x - self.domain.lower()[d]) / self.widths[d];
            if rel <= F::zero() {
                0
            } else {
                rel.floor().to_usize().unwrap_or(res - 1).min(res - 1)
            }
        };
        Some((to_idx(lo), to_idx(hi)))
    }
}
