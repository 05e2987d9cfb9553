//! Maximum-entropy approximation of absolutely continuous conditionally
//! invariant measures for open dynamical systems.
//!
//! The pipeline runs in four stages:
//!
//! 1. an [`OpenSystem`] of piecewise-affine branches on an axis-aligned box
//!    is discretized on a [`GridPartition`], producing the sparse
//!    [`OverlapData`] of cell-to-cell and cell-to-hole masses;
//! 2. [`reduce_domain`] drops every cell not reachable from a cycle of the
//!    overlap graph, which is what makes the dual problem attain its maximum;
//! 3. [`solve`] runs the multiplicative fixed-point iteration for the dual
//!    multipliers at a chosen survivor ratio `alpha` and reconstructs the
//!    piecewise-constant density together with entropy, escape and residual
//!    diagnostics;
//! 4. [`run_sweep`] repeats the solve over a range of `alpha` values against
//!    the shared reduced problem to locate the entropy-maximizing escape
//!    rate.
//!
//! Everything is generic over the scalar type through [`Scalar`]; `f64` is
//! the default type parameter on all public data structures.

// Negated float comparisons are deliberate throughout: `!(a < b)` rejects
// NaN inputs where `a >= b` would accept them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod density;
pub mod dual;
pub mod error;
pub mod maps;
pub mod overlap;
pub mod partition;
pub mod reduce;
pub mod scalar;
pub mod solver;
pub mod sparse;
pub mod sweep;
pub mod system;

pub use cache::{load_or_compute, map_fingerprint, CacheEvent};
pub use density::{reconstruct_density, HolePiece, PiecewiseDensity, SurvivorPiece};
pub use dual::{dual_value_and_gradient, moment_residuals};
pub use error::{Error, Result};
pub use overlap::{compute_overlap, hole_masses_geometric, Backend, BackendTag, OverlapData};
pub use partition::GridPartition;
pub use reduce::{reachability_closure, reachability_oracle, reduce_domain, ReducedProblem};
pub use scalar::Scalar;
pub use solver::{
    fixed_point, fixed_point_from, psi_step, solve, solve_from, DualState, MaxentSolution,
    SolverConfig,
};
pub use sparse::SparseMatrix;
pub use sweep::{alpha_range, run_sweep, SweepReport, SweepRow};
pub use system::{AffineBranch, DomainBox, OpenSystem};
