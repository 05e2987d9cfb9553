//! Plain-text cache for overlap data.
//!
//! Overlap computation dominates the cost of a sweep at fine resolutions, so
//! the sparse data can be written to disk and reloaded when the map geometry,
//! resolution and backend all match. Values are written with 17 significant
//! digits, which round-trips IEEE doubles exactly.
//!
//! Format (whitespace separated):
//!
//! ```text
//! accim-overlap-v1
//! map <fingerprint>
//! resolution <r0> [r1]
//! backend exact            |  backend sampled <samples> <seed> <undefined>
//! n <cells>
//! nnz <entries>
//! <row> <col> <value>      (nnz lines)
//! hole
//! <value>                  (n lines)
//! cell_mass
//! <value>                  (n lines)
//! end
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::overlap::{compute_overlap, realized_samples, Backend, BackendTag, OverlapData};
use crate::partition::GridPartition;
use crate::scalar::Scalar;
use crate::system::OpenSystem;

const MAGIC: &str = "accim-overlap-v1";

/// 17 significant digits; parses back to the identical double.
pub fn format_float<F: Scalar>(value: F) -> String {
    format!("{value:.16e}")
}

/// FNV-1a over a canonical rendering of the system geometry. Stable across
/// runs and platforms, unlike the std hasher.
pub fn map_fingerprint<F: Scalar>(system: &OpenSystem<F>) -> String {
    let mut canonical = String::new();
    let _ = write!(canonical, "dim {};", system.dim());
    let render = |xs: &[F]| {
        xs.iter()
            .map(|x| format_float(*x))
            .collect::<Vec<_>>()
            .join(",")
    };
    let _ = write!(
        canonical,
        "domain {}|{};",
        render(system.domain().lower()),
        render(system.domain().upper())
    );
    for branch in system.branches() {
        let _ = write!(
            canonical,
            "branch {}|{}|{}|{};",
            render(branch.domain().lower()),
            render(branch.domain().upper()),
            render(branch.linear()),
            render(branch.offset())
        );
    }
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in canonical.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

fn backend_line(tag: &BackendTag) -> String {
    match tag {
        BackendTag::Exact => "backend exact".to_string(),
        BackendTag::Sampled {
            samples_per_cell,
            seed,
            undefined_points,
        } => format!("backend sampled {samples_per_cell} {seed} {undefined_points}"),
    }
}

/// Serializes overlap data with its provenance header.
pub fn write_overlap<F: Scalar>(
    path: &Path,
    fingerprint: &str,
    resolution: &[usize],
    overlap: &OverlapData<F>,
) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "{MAGIC}");
    let _ = writeln!(text, "map {fingerprint}");
    let resolution_text = resolution
        .iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    let _ = writeln!(text, "resolution {resolution_text}");
    let _ = writeln!(text, "{}", backend_line(overlap.backend()));
    let _ = writeln!(text, "n {}", overlap.n());
    let _ = writeln!(text, "nnz {}", overlap.matrix().nnz());
    for (k, j, v) in overlap.matrix().iter() {
        let _ = writeln!(text, "{k} {j} {}", format_float(v));
    }
    let _ = writeln!(text, "hole");
    for v in overlap.hole() {
        let _ = writeln!(text, "{}", format_float(*v));
    }
    let _ = writeln!(text, "cell_mass");
    for v in overlap.cell_mass() {
        let _ = writeln!(text, "{}", format_float(*v));
    }
    let _ = writeln!(text, "end");
    std::fs::write(path, text)?;
    Ok(())
}

struct Parser<'a> {
    tokens: std::str::SplitAsciiWhitespace<'a>,
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.tokens
            .next()
            .ok_or_else(|| Error::Cache("truncated cache file".into()))
    }

    fn expect(&mut self, keyword: &str) -> Result<()> {
        let token = self.next()?;
        if token != keyword {
            return Err(Error::Cache(format!(
                "expected '{keyword}', found '{token}'"
            )));
        }
        Ok(())
    }

    fn usize(&mut self) -> Result<usize> {
        let token = self.next()?;
        token
            .parse()
            .map_err(|_| Error::Cache(format!("bad integer '{token}'")))
    }

    fn u64(&mut self) -> Result<u64> {
        let token = self.next()?;
        token
            .parse()
            .map_err(|_| Error::Cache(format!("bad integer '{token}'")))
    }

    fn float<F: Scalar>(&mut self) -> Result<F> {
        let token = self.next()?;
        let value: f64 = token
            .parse()
            .map_err(|_| Error::Cache(format!("bad float '{token}'")))?;
        F::from_f64(value).ok_or_else(|| Error::Cache(format!("unrepresentable float '{token}'")))
    }
}

/// Reads a cache file back; returns the stored fingerprint, resolution and
/// data.
pub fn read_overlap<F: Scalar>(path: &Path) -> Result<(String, Vec<usize>, OverlapData<F>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(Error::Cache("missing magic header".into()));
    }
    let rest = text.split_once('\n').map(|(_, r)| r).unwrap_or("");
    let mut p = Parser {
        tokens: rest.split_ascii_whitespace(),
    };
    p.expect("map")?;
    let fingerprint = p.next()?.to_string();
    p.expect("resolution")?;
    // Resolution entries run until the backend keyword.
    let mut resolution = Vec::new();
    let backend;
    loop {
        let token = p.next()?;
        if token == "backend" {
            backend = p.next()?;
            break;
        }
        resolution.push(
            token
                .parse::<usize>()
                .map_err(|_| Error::Cache(format!("bad resolution entry '{token}'")))?,
        );
    }
    if resolution.is_empty() || resolution.len() > 2 {
        return Err(Error::Cache("bad resolution header".into()));
    }
    let tag = match backend {
        "exact" => BackendTag::Exact,
        "sampled" => BackendTag::Sampled {
            samples_per_cell: p.usize()?,
            seed: p.u64()?,
            undefined_points: p.usize()?,
        },
        other => return Err(Error::Cache(format!("unknown backend '{other}'"))),
    };
    p.expect("n")?;
    let n = p.usize()?;
    p.expect("nnz")?;
    let nnz = p.usize()?;
    let mut triplets = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let k = p.usize()?;
        let j = p.usize()?;
        let v = p.float::<F>()?;
        if k >= n || j >= n {
            return Err(Error::Cache("entry index out of range".into()));
        }
        triplets.push((k, j, v));
    }
    p.expect("hole")?;
    let mut hole = Vec::with_capacity(n);
    for _ in 0..n {
        hole.push(p.float::<F>()?);
    }
    p.expect("cell_mass")?;
    let mut cell_mass = Vec::with_capacity(n);
    for _ in 0..n {
        cell_mass.push(p.float::<F>()?);
    }
    p.expect("end")?;
    let data = OverlapData::from_parts(n, triplets, hole, cell_mass, tag)
        .map_err(|e| Error::Cache(format!("inconsistent cache payload: {e}")))?;
    Ok((fingerprint, resolution, data))
}

/// What `load_or_compute` ended up doing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheEvent {
    /// Cache file matched and was loaded.
    Hit,
    /// Data was computed (and written back when a path was given).
    Computed { reason: String },
}

fn requested_tag(backend: Backend, dim: usize) -> BackendTag {
    match backend {
        Backend::Exact => BackendTag::Exact,
        Backend::Sampled {
            samples_per_cell,
            seed,
        } => BackendTag::Sampled {
            samples_per_cell: realized_samples(samples_per_cell, dim),
            seed,
            undefined_points: 0,
        },
    }
}

fn tags_match(stored: &BackendTag, requested: &BackendTag) -> bool {
    match (stored, requested) {
        (BackendTag::Exact, BackendTag::Exact) => true,
        (
            BackendTag::Sampled {
                samples_per_cell: a,
                seed: sa,
                ..
            },
            BackendTag::Sampled {
                samples_per_cell: b,
                seed: sb,
                ..
            },
        ) => a == b && sa == sb,
        _ => false,
    }
}

/// Loads overlap data from `cache` when its header matches the request,
/// otherwise computes it (rewriting the cache when a path is given). A
/// corrupt cache is reported in the event and recomputed, never fatal.
pub fn load_or_compute<F: Scalar>(
    system: &OpenSystem<F>,
    partition: &GridPartition<F>,
    backend: Backend,
    cache: Option<&Path>,
) -> Result<(OverlapData<F>, CacheEvent)> {
    let fingerprint = map_fingerprint(system);
    let requested = requested_tag(backend, partition.dim());

    let reason = match cache {
        None => "no cache configured".to_string(),
        Some(path) if !path.exists() => "cache file does not exist".to_string(),
        Some(path) => match read_overlap::<F>(path) {
            Ok((stored_fp, stored_resolution, data)) => {
                if stored_fp == fingerprint
                    && stored_resolution == partition.resolution()
                    && tags_match(data.backend(), &requested)
                {
                    return Ok((data, CacheEvent::Hit));
                }
                "cache header mismatch".to_string()
            }
            Err(err) => format!("corrupt cache: {err}"),
        },
    };

    let data = compute_overlap(system, partition, backend)?;
    if let Some(path) = cache {
        write_overlap(path, &fingerprint, partition.resolution(), &data)?;
    }
    Ok((data, CacheEvent::Computed { reason }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps;

    fn tent_grid(resolution: usize) -> (OpenSystem<f64>, GridPartition<f64>) {
        let tent = maps::tent3::<f64>();
        let grid = GridPartition::new(tent.domain().clone(), vec![resolution]).unwrap();
        (tent, grid)
    }

    #[test]
    fn round_trip_is_bitwise() {
        let (tent, grid) = tent_grid(37);
        let data = compute_overlap(&tent, &grid, Backend::Exact).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tent.overlap");
        write_overlap(&path, &map_fingerprint(&tent), grid.resolution(), &data).unwrap();
        let (fp, resolution, loaded) = read_overlap::<f64>(&path).unwrap();
        assert_eq!(fp, map_fingerprint(&tent));
        assert_eq!(resolution, vec![37]);
        assert_eq!(loaded.matrix().nnz(), data.matrix().nnz());
        for (a, b) in loaded.matrix().iter().zip(data.matrix().iter()) {
            assert_eq!(a, b, "entries must reload bitwise");
        }
        assert_eq!(loaded.hole(), data.hole());
        assert_eq!(loaded.cell_mass(), data.cell_mass());
    }

    #[test]
    fn second_load_hits_and_matches() {
        let (tent, grid) = tent_grid(21);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.txt");
        let (first, event) = load_or_compute(&tent, &grid, Backend::Exact, Some(&path)).unwrap();
        assert!(matches!(event, CacheEvent::Computed { .. }));
        let (second, event) = load_or_compute(&tent, &grid, Backend::Exact, Some(&path)).unwrap();
        assert_eq!(event, CacheEvent::Hit);
        for (a, b) in first.matrix().iter().zip(second.matrix().iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn resolution_change_misses() {
        let (tent, grid) = tent_grid(21);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.txt");
        load_or_compute(&tent, &grid, Backend::Exact, Some(&path)).unwrap();
        let finer = GridPartition::new(tent.domain().clone(), vec![42]).unwrap();
        let (_, event) = load_or_compute(&tent, &finer, Backend::Exact, Some(&path)).unwrap();
        match event {
            CacheEvent::Computed { reason } => assert!(reason.contains("mismatch")),
            other => panic!("expected recompute, got {other:?}"),
        }
    }

    #[test]
    fn different_map_misses() {
        let (tent, grid) = tent_grid(10);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.txt");
        load_or_compute(&tent, &grid, Backend::Exact, Some(&path)).unwrap();
        // Same resolution, different geometry.
        let domain = crate::system::DomainBox::new(vec![0.0], vec![1.0]).unwrap();
        let branch =
            crate::system::AffineBranch::new(domain.clone(), vec![1.0], vec![0.0]).unwrap();
        let identity = OpenSystem::new(domain, vec![branch]).unwrap();
        let grid2 = GridPartition::new(identity.domain().clone(), vec![10]).unwrap();
        let (data, event) =
            load_or_compute(&identity, &grid2, Backend::Exact, Some(&path)).unwrap();
        assert!(matches!(event, CacheEvent::Computed { .. }));
        assert_eq!(data.matrix().get(0, 0), 0.1);
    }

    #[test]
    fn truncated_cache_recomputes_with_warning_reason() {
        let (tent, grid) = tent_grid(9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.txt");
        load_or_compute(&tent, &grid, Backend::Exact, Some(&path)).unwrap();
        let full = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &full[..full.len() / 2]).unwrap();
        let (data, event) = load_or_compute(&tent, &grid, Backend::Exact, Some(&path)).unwrap();
        match event {
            CacheEvent::Computed { reason } => {
                assert!(reason.contains("corrupt"), "reason was: {reason}")
            }
            other => panic!("expected recompute, got {other:?}"),
        }
        assert_eq!(data.n(), 9);
        // The rewritten cache is valid again.
        let (_, event) = load_or_compute(&tent, &grid, Backend::Exact, Some(&path)).unwrap();
        assert_eq!(event, CacheEvent::Hit);
    }

    #[test]
    fn sampled_tag_must_match_seed() {
        let (tent, grid) = tent_grid(6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.txt");
        let sampled = Backend::Sampled {
            samples_per_cell: 100,
            seed: 1,
        };
        load_or_compute(&tent, &grid, sampled, Some(&path)).unwrap();
        let reseeded = Backend::Sampled {
            samples_per_cell: 100,
            seed: 2,
        };
        let (_, event) = load_or_compute(&tent, &grid, reseeded, Some(&path)).unwrap();
        assert!(matches!(event, CacheEvent::Computed { .. }));
    }

    #[test]
    fn fingerprint_separates_maps() {
        assert_ne!(
            map_fingerprint(&maps::tent3::<f64>()),
            map_fingerprint(&maps::saddle::<f64>())
        );
    }
}
