//! Plot-ready artifact files. All numeric output carries 17 significant
//! digits so downstream tools see the exact doubles.

use std::fmt::Write as _;
use std::path::Path;

use accim_core::cache::format_float;
use accim_core::{
    Backend, CacheEvent, GridPartition, MaxentSolution, OverlapData, ReducedProblem, Result,
    SweepReport,
};
use serde_json::json;

fn g17(value: f64) -> String {
    format_float(value)
}

pub fn write_sweep_csv(path: &Path, report: &SweepReport) -> Result<()> {
    let mut text = String::from(
        "alpha,entropy,neg_entropy,dual_value,survivor_mass,residual_sup,iterations,converged\n",
    );
    for row in &report.rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            g17(row.alpha),
            g17(row.entropy),
            g17(row.neg_entropy),
            g17(row.dual_value),
            g17(row.survivor_mass),
            g17(row.residual_sup),
            row.iterations,
            row.converged
        );
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Cell-averaged density: one row per grid cell with its center coordinates.
pub fn write_density_csv(
    path: &Path,
    partition: &GridPartition,
    solution: &MaxentSolution,
) -> Result<()> {
    let averages = solution.density.cell_averages(&partition.cell_masses());
    let mut text = String::from(match partition.dim() {
        1 => "cell_index,x,density\n",
        _ => "cell_index,x,y,density\n",
    });
    for (k, &value) in averages.iter().enumerate() {
        let center = partition.cell_center(k);
        let coords = center.iter().map(|c| g17(*c)).collect::<Vec<_>>().join(",");
        let _ = writeln!(text, "{k},{coords},{}", g17(value));
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Opt-in refined export: one row per constant piece of the density.
pub fn write_refined_csv(path: &Path, solution: &MaxentSolution) -> Result<()> {
    let mut text = String::from("kind,source_cell,target_cell,density,mass\n");
    for piece in &solution.density.survivor {
        let _ = writeln!(
            text,
            "survivor,{},{},{},{}",
            piece.source,
            piece.target,
            g17(piece.value),
            g17(piece.weight)
        );
    }
    for piece in &solution.density.hole {
        let _ = writeln!(
            text,
            "hole,{},,{},{}",
            piece.cell,
            g17(piece.value),
            g17(piece.weight)
        );
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Kept-cell mask with multi-indices, for plotting the reduced domain.
pub fn write_mask_csv(
    path: &Path,
    partition: &GridPartition,
    reduced: &ReducedProblem,
) -> Result<()> {
    let mut text = String::from(match partition.dim() {
        1 => "cell_index,ix,kept\n",
        _ => "cell_index,ix,iy,kept\n",
    });
    for k in 0..partition.n() {
        let multi = partition.flat_to_multi(k);
        let indices = multi
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(text, "{k},{indices},{}", reduced.keep()[k]);
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub struct SummaryContext<'a> {
    pub map_name: &'a str,
    pub resolution: &'a [usize],
    pub backend: Backend,
    pub overlap: &'a OverlapData,
    pub reduced: &'a ReducedProblem,
    pub cache_event: Option<&'a CacheEvent>,
}

pub fn write_summary_json(
    path: &Path,
    context: &SummaryContext,
    report: &SweepReport,
) -> Result<()> {
    let backend = match context.backend {
        Backend::Exact => json!("exact"),
        Backend::Sampled {
            samples_per_cell,
            seed,
        } => json!({"sampled": {"samples_per_cell": samples_per_cell, "seed": seed}}),
    };
    let cache = context.cache_event.map(|event| match event {
        CacheEvent::Hit => json!("hit"),
        CacheEvent::Computed { reason } => json!({ "computed": reason }),
    });
    let rows: Vec<serde_json::Value> = report
        .rows
        .iter()
        .map(|row| {
            json!({
                "alpha": row.alpha,
                "entropy": row.entropy,
                "neg_entropy": row.neg_entropy,
                "dual_value": row.dual_value,
                "survivor_mass": row.survivor_mass,
                "residual_sup": row.residual_sup,
                "iterations": row.iterations,
                "converged": row.converged,
                "error": row.error,
            })
        })
        .collect();
    let summary = json!({
        "map": context.map_name,
        "resolution": context.resolution,
        "backend": backend,
        "n": context.overlap.n(),
        "nnz": context.overlap.matrix().nnz(),
        "kept_count": context.reduced.kept_count(),
        "cache": cache,
        "argmax_alpha": report.argmax_alpha,
        "rows": rows,
    });
    std::fs::write(path, serde_json::to_string_pretty(&summary).expect("json"))?;
    Ok(())
}

/// File-name fragment for one alpha value; sweep steps below 1e-6 would
/// collide and are not supported by the file layout.
pub fn alpha_tag(alpha: f64) -> String {
    format!("{alpha:.6}")
}
