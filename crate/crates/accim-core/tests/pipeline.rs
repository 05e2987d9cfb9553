//! End-to-end pipeline checks across backends and scalar types.

mod common;

use accim_core::*;
use common::*;

/// Densities reconstructed for the saddle carry mass only inside the reduced
/// band, for every sweep value.
#[test]
fn saddle_density_vanishes_off_reduced_domain() {
    let (grid, _, reduced) = saddle_parts(100);
    for alpha in [0.3, 0.45, 0.6, 0.75] {
        let solution = solve(&reduced, &SolverConfig::new(alpha)).unwrap();
        let masses = solution.density.cell_masses();
        for (k, &mass) in masses.iter().enumerate() {
            let y_row = grid.flat_to_multi(k)[1];
            if (46..=53).contains(&y_row) {
                continue;
            }
            assert_eq!(mass, 0.0, "alpha {alpha}: mass off the band at cell {k}");
        }
    }
}

#[test]
fn solutions_are_feasible_probability_densities() {
    let (_, tent) = tent_reduced(200);
    let (_, _, saddle) = saddle_parts(50);
    let cases: [(&ReducedProblem, f64); 3] = [(&tent, 0.45), (&tent, 0.7), (&saddle, 0.55)];
    for (reduced, alpha) in cases {
        let solution = solve(reduced, &SolverConfig::new(alpha)).unwrap();
        assert!((solution.density.total_mass() - 1.0).abs() <= 1e-10);
        let (lo, _) = solution.density.value_range();
        assert!(lo >= 0.0);
        for piece in &solution.density.survivor {
            assert!(reduced.keep()[piece.source] && reduced.keep()[piece.target]);
        }
        for piece in &solution.density.hole {
            assert!(reduced.keep()[piece.cell]);
        }
    }
}

/// The whole pipeline also runs on sampled overlap data; the survivor mass
/// identity is structural and holds regardless of sampling error.
#[test]
fn sampled_backend_full_pipeline() {
    let tent = maps::tent3::<f64>();
    let grid = GridPartition::new(tent.domain().clone(), vec![50]).unwrap();
    let overlap = compute_overlap(
        &tent,
        &grid,
        Backend::Sampled {
            samples_per_cell: 2000,
            seed: 31,
        },
    )
    .unwrap();
    let reduced = reduce_domain(&overlap).unwrap();
    let alpha = 2.0 / 3.0;
    let solution = solve(&reduced, &SolverConfig::new(alpha)).unwrap();
    assert!((solution.survivor_mass - alpha).abs() <= 1e-9);
    assert!(solution.duality_gap() <= 1e-8);
    // The sampled matrix is a perturbation of the exact one, so the density
    // is only approximately flat.
    assert!(solution.entropy.abs() < 0.01, "H = {}", solution.entropy);
}

/// The core is generic over the scalar; a single-precision run goes through
/// with appropriately loose tolerances.
#[test]
fn single_precision_pipeline_smoke() {
    let tent = maps::tent3::<f32>();
    let grid = GridPartition::new(tent.domain().clone(), vec![30]).unwrap();
    let overlap = compute_overlap(&tent, &grid, Backend::Exact).unwrap();
    let reduced = reduce_domain(&overlap).unwrap();
    let config = SolverConfig::<f32> {
        alpha: 0.5,
        tol: 1e-5,
        max_iter: 100_000,
        divergence_bound: 1e10,
    };
    let solution = solve(&reduced, &config).unwrap();
    assert!((solution.survivor_mass - 0.5).abs() < 1e-3);
    assert!((solution.density.total_mass() - 1.0).abs() < 1e-4);
}

/// Overlap, reduction and solves are bit-reproducible run to run.
#[test]
fn pipeline_is_deterministic() {
    let run = || {
        let (_, reduced) = tent_reduced(120);
        let solution = solve(&reduced, &SolverConfig::new(0.42)).unwrap();
        (
            solution.entropy,
            solution.survivor_mass,
            solution.iterations,
            solution.density.survivor.len(),
        )
    };
    assert_eq!(run(), run());
}
