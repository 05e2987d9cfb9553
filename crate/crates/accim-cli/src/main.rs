//! `accim`: maximum-entropy conditionally invariant measures from the
//! command line.

mod config;
mod output;

use std::path::PathBuf;

use accim_core::{
    alpha_range, load_or_compute, reduce_domain, run_sweep, CacheEvent, GridPartition,
    MaxentSolution, SweepReport,
};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{parse_alpha_range, parse_resolution, CommonFlags, FileConfig, Resolved};

#[derive(Parser)]
#[command(
    name = "accim",
    about = "Maximum-entropy approximation of conditionally invariant measures",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// Built-in map name (tent3 | saddle); omit when the config file defines
    /// a custom map.
    #[arg(long)]
    map: Option<String>,

    /// TOML config file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Cells per coordinate, e.g. 1000 or 100x100.
    #[arg(long, value_parser = parse_resolution)]
    resolution: Option<config::Resolution>,

    /// Overlap backend: exact | sampled.
    #[arg(long)]
    backend: Option<String>,

    /// Samples per cell for the sampled backend.
    #[arg(long)]
    samples: Option<usize>,

    /// Seed for the sampled backend.
    #[arg(long)]
    seed: Option<u64>,

    /// Convergence tolerance on the log-ratio sup norm.
    #[arg(long)]
    tol: Option<f64>,

    #[arg(long)]
    max_iter: Option<usize>,

    /// Iterate magnitude treated as dual divergence.
    #[arg(long)]
    divergence_bound: Option<f64>,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Overlap cache file, reused when map, resolution and backend match.
    #[arg(long)]
    cache: Option<PathBuf>,

    /// Also write the piecewise density with one row per refined cell.
    #[arg(long)]
    refined: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single escape-rate parameter and write its artifacts.
    Run {
        #[command(flatten)]
        shared: Shared,
        /// Survivor-mass ratio in (0, 1).
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Solve a range of alphas and report the entropy-maximizing one.
    Sweep {
        #[command(flatten)]
        shared: Shared,
        /// start:stop:step, all in (0, 1).
        #[arg(long, value_parser = parse_alpha_range)]
        alpha_range: Option<config::AlphaRangeConfig>,
    },
    /// Compute (or refresh) overlap data only, typically into a cache file.
    Overlap {
        #[command(flatten)]
        shared: Shared,
    },
}

fn resolved_from(
    shared: Shared,
) -> Result<(Resolved, Option<f64>, Option<config::AlphaRangeConfig>)> {
    let file = match &shared.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let file_alpha = file.alpha;
    let file_range = file.alpha_range;
    let flags = CommonFlags {
        map: shared.map,
        resolution: shared.resolution.map(|r| r.0),
        backend: shared.backend,
        samples: shared.samples,
        seed: shared.seed,
        tol: shared.tol,
        max_iter: shared.max_iter,
        divergence_bound: shared.divergence_bound,
        out: shared.out,
        cache: shared.cache,
        refined: shared.refined,
    };
    let resolved = config::resolve(flags, file)?;
    Ok((resolved, file_alpha, file_range))
}

struct Pipeline {
    resolved: Resolved,
    partition: GridPartition,
    overlap: accim_core::OverlapData,
    reduced: accim_core::ReducedProblem,
    cache_event: CacheEvent,
}

fn prepare(resolved: Resolved) -> Result<Pipeline> {
    let partition = GridPartition::new(
        resolved.system.domain().clone(),
        resolved.resolution.clone(),
    )?;
    let (overlap, cache_event) = load_or_compute(
        &resolved.system,
        &partition,
        resolved.backend,
        resolved.cache.as_deref(),
    )?;
    if let CacheEvent::Computed { reason } = &cache_event {
        if reason.starts_with("corrupt") {
            eprintln!("warning: {reason}; recomputed overlap data");
        }
    }
    let reduced = reduce_domain(&overlap)?;
    Ok(Pipeline {
        resolved,
        partition,
        overlap,
        reduced,
        cache_event,
    })
}

fn execute_alphas(pipeline: &Pipeline, alphas: &[f64]) -> Result<()> {
    let resolved = &pipeline.resolved;
    let (report, outcomes) = run_sweep(
        &pipeline.reduced,
        alphas,
        resolved.tol,
        resolved.max_iter,
        resolved.divergence_bound,
    );

    std::fs::create_dir_all(&resolved.out)
        .with_context(|| format!("cannot create output directory {}", resolved.out.display()))?;
    output::write_sweep_csv(&resolved.out.join("sweep.csv"), &report)?;
    output::write_mask_csv(
        &resolved.out.join("mask.csv"),
        &pipeline.partition,
        &pipeline.reduced,
    )?;
    let solutions: Vec<&MaxentSolution> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    for solution in &solutions {
        let tag = output::alpha_tag(solution.alpha);
        output::write_density_csv(
            &resolved.out.join(format!("density_alpha{tag}.csv")),
            &pipeline.partition,
            solution,
        )?;
        if resolved.refined {
            output::write_refined_csv(
                &resolved.out.join(format!("density_refined_alpha{tag}.csv")),
                solution,
            )?;
        }
    }
    let context = output::SummaryContext {
        map_name: &resolved.map_name,
        resolution: &resolved.resolution,
        backend: resolved.backend,
        overlap: &pipeline.overlap,
        reduced: &pipeline.reduced,
        cache_event: Some(&pipeline.cache_event),
    };
    output::write_summary_json(&resolved.out.join("summary.json"), &context, &report)?;

    print_report(pipeline, &report);
    Ok(())
}

fn print_report(pipeline: &Pipeline, report: &SweepReport) {
    println!(
        "map={} n={} kept={} backend={:?}",
        pipeline.resolved.map_name,
        pipeline.overlap.n(),
        pipeline.reduced.kept_count(),
        pipeline.overlap.backend(),
    );
    println!("alpha      entropy        survivor_mass  iterations  converged");
    for row in &report.rows {
        println!(
            "{:<9.4} {:>14.8e} {:>14.8e} {:>10} {:>10}{}",
            row.alpha,
            row.entropy,
            row.survivor_mass,
            row.iterations,
            row.converged,
            row.error
                .as_deref()
                .map(|e| format!("  ({e})"))
                .unwrap_or_default()
        );
    }
    if let Some(argmax) = report.argmax_alpha {
        println!("entropy-maximizing alpha: {argmax}");
    }
    println!("artifacts written to {}", pipeline.resolved.out.display());
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { shared, alpha } => {
            let (resolved, file_alpha, _) = resolved_from(shared)?;
            let alpha = alpha
                .or(file_alpha)
                .context("run needs --alpha (or alpha in the config file)")?;
            if !(alpha > 0.0 && alpha < 1.0) {
                bail!("alpha must lie in (0, 1), got {alpha}");
            }
            let pipeline = prepare(resolved)?;
            execute_alphas(&pipeline, &[alpha])
        }
        Command::Sweep {
            shared,
            alpha_range: range_flag,
        } => {
            let (resolved, _, file_range) = resolved_from(shared)?;
            let range = range_flag
                .or(file_range)
                .context("sweep needs --alpha-range (or [alpha_range] in the config file)")?;
            let alphas = alpha_range(range.start, range.stop, range.step)?;
            let pipeline = prepare(resolved)?;
            execute_alphas(&pipeline, &alphas)
        }
        Command::Overlap { shared } => {
            let (resolved, _, _) = resolved_from(shared)?;
            let pipeline = prepare(resolved)?;
            println!(
                "map={} n={} nnz={} kept={} backend={:?} cache={:?}",
                pipeline.resolved.map_name,
                pipeline.overlap.n(),
                pipeline.overlap.matrix().nnz(),
                pipeline.reduced.kept_count(),
                pipeline.overlap.backend(),
                pipeline.cache_event,
            );
            if pipeline.resolved.cache.is_none() {
                eprintln!("note: no --cache given; overlap data was not persisted");
            }
            Ok(())
        }
    }
}
