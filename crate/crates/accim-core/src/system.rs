//! Piecewise-affine open dynamical systems on axis-aligned boxes.
//!
//! A system is a finite list of affine branches with diagonal linear part,
//! defined on pairwise non-overlapping boxes that tile the domain. Orbits
//! whose image leaves the domain escape. Keeping the branches diagonal-affine
//! makes preimages of boxes again boxes, so overlap masses can be computed
//! without quadrature.

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};

/// Axis-aligned box in dimension 1 or 2.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox<F = f64> {
    lower: Vec<F>,
    upper: Vec<F>,
}

impl<F: Scalar> DomainBox<F> {
    pub fn new(lower: Vec<F>, upper: Vec<F>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidGeometry(format!(
                "box bounds have mismatched lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() || lower.len() > 2 {
            return Err(Error::InvalidGeometry(format!(
                "dimension {} not supported (must be 1 or 2)",
                lower.len()
            )));
        }
        for d in 0..lower.len() {
            if !(lower[d] < upper[d]) {
                return Err(Error::InvalidGeometry(format!(
                    "box has empty extent in coordinate {d}: [{}, {}]",
                    lower[d], upper[d]
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[F] {
        &self.lower
    }

    pub fn upper(&self) -> &[F] {
        &self.upper
    }

    pub fn measure(&self) -> F {
        (0..self.dim())
            .map(|d| self.upper[d] - self.lower[d])
            .fold(F::one(), |acc, w| acc * w)
    }

    /// Inclusive containment; boundary points count as inside.
    pub fn contains(&self, point: &[F]) -> bool {
        point.len() == self.dim()
            && (0..self.dim()).all(|d| self.lower[d] <= point[d] && point[d] <= self.upper[d])
    }

    pub fn contains_box(&self, other: &DomainBox<F>) -> bool {
        other.dim() == self.dim()
            && (0..self.dim())
                .all(|d| self.lower[d] <= other.lower[d] && other.upper[d] <= self.upper[d])
    }

    /// Intersection, or `None` when it has measure zero.
    pub fn intersect(&self, other: &DomainBox<F>) -> Option<DomainBox<F>> {
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for d in 0..self.dim() {
            let lo = self.lower[d].max(other.lower[d]);
            let hi = self.upper[d].min(other.upper[d]);
            if !(lo < hi) {
                return None;
            }
            lower.push(lo);
            upper.push(hi);
        }
        Some(DomainBox { lower, upper })
    }
}

/// One affine branch `p -> linear * p + offset` with diagonal linear part.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineBranch<F = f64> {
    domain: DomainBox<F>,
    linear: Vec<F>,
    offset: Vec<F>,
}

impl<F: Scalar> AffineBranch<F> {
    pub fn new(domain: DomainBox<F>, linear: Vec<F>, offset: Vec<F>) -> Result<Self> {
        if linear.len() != domain.dim() || offset.len() != domain.dim() {
            return Err(Error::InvalidGeometry(
                "branch coefficients do not match the branch dimension".into(),
            ));
        }
        if linear.iter().any(|s| *s == F::zero()) {
            return Err(Error::InvalidGeometry(
                "branch has a zero slope; branches must be locally invertible".into(),
            ));
        }
        Ok(Self {
            domain,
            linear,
            offset,
        })
    }

    pub fn domain(&self) -> &DomainBox<F> {
        &self.domain
    }

    pub fn linear(&self) -> &[F] {
        &self.linear
    }

    pub fn offset(&self) -> &[F] {
        &self.offset
    }

    pub fn apply(&self, point: &[F]) -> Vec<F> {
        (0..point.len())
            .map(|d| self.linear[d] * point[d] + self.offset[d])
            .collect()
    }

    /// Image of a box under the branch, as an oriented box.
    pub fn image_box(&self, source: &DomainBox<F>) -> DomainBox<F> {
        let mut lower = Vec::with_capacity(source.dim());
        let mut upper = Vec::with_capacity(source.dim());
        for d in 0..source.dim() {
            let a = self.linear[d] * source.lower[d] + self.offset[d];
            let b = self.linear[d] * source.upper[d] + self.offset[d];
            lower.push(a.min(b));
            upper.push(a.max(b));
        }
        DomainBox { lower, upper }
    }

    /// The box `{p in branch domain : T(p) in target}`, or `None` when it has
    /// measure zero. Exact up to one rounding per endpoint because the branch
    /// is diagonal-affine.
    pub fn preimage_box(&self, target: &DomainBox<F>) -> Option<DomainBox<F>> {
        let mut lower = Vec::with_capacity(target.dim());
        let mut upper = Vec::with_capacity(target.dim());
        for d in 0..target.dim() {
            let a = (target.lower[d] - self.offset[d]) / self.linear[d];
            let b = (target.upper[d] - self.offset[d]) / self.linear[d];
            let lo = a.min(b).max(self.domain.lower[d]);
            let hi = a.max(b).min(self.domain.upper[d]);
            if !(lo < hi) {
                return None;
            }
            lower.push(lo);
            upper.push(hi);
        }
        Some(DomainBox { lower, upper })
    }
}

/// An open dynamical system: the map is defined branch-wise on the domain,
/// and points whose image leaves the domain escape. The reference measure is
/// Lebesgue on the domain.
#[derive(Debug, Clone)]
pub struct OpenSystem<F = f64> {
    domain: DomainBox<F>,
    branches: Vec<AffineBranch<F>>,
}

impl<F: Scalar> OpenSystem<F> {
    pub fn new(domain: DomainBox<F>, branches: Vec<AffineBranch<F>>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidGeometry("system has no branches".into()));
        }
        let measure = domain.measure();
        let tol = measure * F::epsilon() * real(64.0);
        let mut covered = F::zero();
        for (i, branch) in branches.iter().enumerate() {
            if branch.domain.dim() != domain.dim() {
                return Err(Error::InvalidGeometry(format!(
                    "branch {i} has dimension {} but the domain has dimension {}",
                    branch.domain.dim(),
                    domain.dim()
                )));
            }
            if !domain.contains_box(&branch.domain) {
                return Err(Error::InvalidGeometry(format!(
                    "branch {i} domain is not contained in the system domain"
                )));
            }
            covered = covered + branch.domain.measure();
        }
        for i in 0..branches.len() {
            for j in i + 1..branches.len() {
                if let Some(overlap) = branches[i].domain.intersect(&branches[j].domain) {
                    if overlap.measure() > tol {
                        return Err(Error::InvalidGeometry(format!(
                            "branch domains {i} and {j} overlap with positive measure"
                        )));
                    }
                }
            }
        }
        if (covered - measure).abs() > tol {
            return Err(Error::InvalidGeometry(format!(
                "branch domains cover measure {covered} of a domain with measure {measure}"
            )));
        }
        Ok(Self { domain, branches })
    }

    pub fn domain(&self) -> &DomainBox<F> {
        &self.domain
    }

    pub fn branches(&self) -> &[AffineBranch<F>] {
        &self.branches
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// The branch containing `point`; boundary points resolve to the branch
    /// with the lowest index.
    pub fn branch_containing(&self, point: &[F]) -> Option<&AffineBranch<F>> {
        self.branches.iter().find(|b| b.domain.contains(point))
    }

    /// Applies the map. Returns the image and whether it escaped the domain.
    pub fn evaluate(&self, point: &[F]) -> Result<(Vec<F>, bool)> {
        let branch = self.branch_containing(point).ok_or_else(|| {
            Error::UndefinedPoint(
                point
                    .iter()
                    .map(|x| x.to_f64().unwrap_or(f64::NAN))
                    .collect(),
            )
        })?;
        let image = branch.apply(point);
        let escaped = !self.domain.contains(&image);
        Ok((image, escaped))
    }
}
