//! Run configuration: optional TOML file merged under command-line flags.

use std::path::{Path, PathBuf};

use accim_core::{maps, AffineBranch, Backend, DomainBox, OpenSystem};
use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

/// On-disk configuration. Every field is optional; command-line flags
/// override whatever the file sets. Custom maps are described by `domain`
/// plus `branches`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub map: Option<String>,
    pub resolution: Option<Vec<usize>>,
    pub backend: Option<String>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub alpha_range: Option<AlphaRangeConfig>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub divergence_bound: Option<f64>,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub refined: Option<bool>,
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub branches: Vec<BranchConfig>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaRangeConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub slopes: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        // toml errors carry line/column diagnostics in their Display.
        toml::from_str(&text).map_err(|e| anyhow!("config parse error in {}:\n{e}", path.display()))
    }
}

/// Fully resolved run parameters.
pub struct Resolved {
    pub map_name: String,
    pub system: OpenSystem,
    pub resolution: Vec<usize>,
    pub backend: Backend,
    pub tol: f64,
    pub max_iter: usize,
    pub divergence_bound: f64,
    pub out: PathBuf,
    pub cache: Option<PathBuf>,
    pub refined: bool,
}

pub struct CommonFlags {
    pub map: Option<String>,
    pub resolution: Option<Vec<usize>>,
    pub backend: Option<String>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub divergence_bound: Option<f64>,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub refined: bool,
}

fn build_custom_map(domain: &DomainConfig, branches: &[BranchConfig]) -> Result<OpenSystem> {
    let domain_box = DomainBox::new(domain.lower.clone(), domain.upper.clone())
        .context("invalid custom map domain")?;
    let mut built = Vec::with_capacity(branches.len());
    for (i, branch) in branches.iter().enumerate() {
        let branch_box = DomainBox::new(branch.lower.clone(), branch.upper.clone())
            .with_context(|| format!("invalid domain for branch {i}"))?;
        built.push(
            AffineBranch::new(branch_box, branch.slopes.clone(), branch.offsets.clone())
                .with_context(|| format!("invalid coefficients for branch {i}"))?,
        );
    }
    OpenSystem::new(domain_box, built).context("invalid custom map")
}

pub fn resolve(flags: CommonFlags, file: FileConfig) -> Result<Resolved> {
    let map_choice = flags.map.or(file.map);
    let (map_name, system) = match map_choice {
        Some(name) => {
            let system = maps::by_name::<f64>(&name)
                .ok_or_else(|| anyhow!("unknown built-in map '{name}' (try tent3 or saddle)"))?;
            (name, system)
        }
        None => {
            let domain = file.domain.as_ref().ok_or_else(|| {
                anyhow!("no map given: pass --map or a config with [domain] and [[branches]]")
            })?;
            if file.branches.is_empty() {
                bail!("custom map config has a [domain] but no [[branches]]");
            }
            (
                "custom".to_string(),
                build_custom_map(domain, &file.branches)?,
            )
        }
    };

    let resolution = flags
        .resolution
        .or(file.resolution)
        .ok_or_else(|| anyhow!("missing --resolution"))?;
    if resolution.len() != system.dim() {
        bail!(
            "resolution {:?} does not match the {}-dimensional map",
            resolution,
            system.dim()
        );
    }

    let backend_name = flags
        .backend
        .or(file.backend)
        .unwrap_or_else(|| "exact".to_string());
    let backend = match backend_name.as_str() {
        "exact" => Backend::Exact,
        "sampled" => Backend::Sampled {
            samples_per_cell: flags.samples.or(file.samples).unwrap_or(10_000),
            seed: flags.seed.or(file.seed).unwrap_or(0),
        },
        other => bail!("unknown backend '{other}' (expected exact or sampled)"),
    };

    Ok(Resolved {
        map_name,
        system,
        resolution,
        backend,
        tol: flags.tol.or(file.tol).unwrap_or(1e-12),
        max_iter: flags.max_iter.or(file.max_iter).unwrap_or(1_000_000),
        divergence_bound: flags
            .divergence_bound
            .or(file.divergence_bound)
            .unwrap_or(1e12),
        out: flags
            .out
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from("accim-out")),
        cache: flags.cache.or(file.cache),
        refined: flags.refined || file.refined.unwrap_or(false),
    })
}

/// Per-coordinate cell counts as a single CLI token (`1000` or `100x100`).
#[derive(Debug, Clone)]
pub struct Resolution(pub Vec<usize>);

/// Parses `1000` or `100x100`.
pub fn parse_resolution(text: &str) -> Result<Resolution> {
    let parts: Vec<&str> = text.split(['x', 'X']).collect();
    if parts.is_empty() || parts.len() > 2 {
        bail!("resolution must be N or NxM, got '{text}'");
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<usize>()
                .with_context(|| format!("bad resolution component '{p}'"))
        })
        .collect::<Result<Vec<usize>>>()
        .map(Resolution)
}

/// Parses `start:stop:step`.
pub fn parse_alpha_range(text: &str) -> Result<AlphaRangeConfig> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("alpha range must be start:stop:step, got '{text}'");
    }
    let mut values = [0.0f64; 3];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .with_context(|| format!("bad alpha range component '{part}'"))?;
    }
    Ok(AlphaRangeConfig {
        start: values[0],
        stop: values[1],
        step: values[2],
    })
}
