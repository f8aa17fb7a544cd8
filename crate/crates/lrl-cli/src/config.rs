//! Experiment configuration files (JSON). Unknown keys are rejected so a
//! typo fails loudly instead of silently running the default.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use lrl::sensing::{GeneratedOperator, InstanceSpec};

/// Config for `lrl generate`. For the gaussian operator, either `n`
/// (measurement count) or `n_factor` (`n = ceil(n_factor * r_star *
/// (d1 + d2))`) must be given, not both; the identity operator fixes
/// `n = d1 * d2` and needs neither.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub d1: usize,
    pub d2: usize,
    pub r_star: usize,
    pub spectrum: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_factor: Option<f64>,
    pub lambda: f64,
    #[serde(default)]
    pub noise_ratio: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub operator: GeneratedOperator,
}

impl GenerateConfig {
    pub fn measurement_count(&self) -> anyhow::Result<usize> {
        if self.operator == GeneratedOperator::Identity {
            let n = self.d1 * self.d2;
            match self.n {
                Some(given) if given != n => {
                    bail!("identity operator fixes n = d1*d2 = {n}, config says {given}")
                }
                _ => {}
            }
            if self.n_factor.is_some() {
                bail!("n_factor does not apply to the identity operator");
            }
            return Ok(n);
        }
        match (self.n, self.n_factor) {
            (Some(n), None) => Ok(n),
            (None, Some(f)) => {
                if !(f.is_finite() && f > 0.0) {
                    bail!("n_factor must be positive");
                }
                Ok((f * (self.r_star * (self.d1 + self.d2)) as f64).ceil() as usize)
            }
            (Some(_), Some(_)) => bail!("give either n or n_factor, not both"),
            (None, None) => bail!("one of n or n_factor is required"),
        }
    }

    pub fn to_instance_spec(&self, seed_override: Option<u64>) -> anyhow::Result<InstanceSpec> {
        Ok(InstanceSpec {
            d1: self.d1,
            d2: self.d2,
            r_star: self.r_star,
            spectrum: self.spectrum.clone(),
            n: self.measurement_count()?,
            lambda: self.lambda,
            noise_ratio: self.noise_ratio,
            seed: seed_override.unwrap_or(self.seed),
            operator: self.operator,
        })
    }
}

/// Config for `lrl sweep`: a grid over noise ratio, penalty weight, and
/// measurement budget, each cell generated and solved over several seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub d1: usize,
    pub d2: usize,
    pub r_star: usize,
    pub spectrum: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub n_factor_grid: Vec<f64>,
    /// Instance seeds per grid cell.
    pub seeds: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_rip_samples")]
    pub rip_samples: usize,
    #[serde(default = "default_sweep_max_iters")]
    pub max_iters: usize,
}

fn default_rip_samples() -> usize {
    200
}

fn default_sweep_max_iters() -> usize {
    5000
}

/// One fully resolved sweep cell.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub rho: f64,
    pub lambda: f64,
    pub n_factor: f64,
    pub rep: u64,
    pub instance_seed: u64,
    pub n: usize,
}

impl SweepConfig {
    /// Deterministic cell enumeration: grids in the given order, then
    /// repetitions; the instance seed mixes the cell index and repetition.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        let mut cell_idx: u64 = 0;
        for &rho in &self.rho_grid {
            for &lambda in &self.lambda_grid {
                for &n_factor in &self.n_factor_grid {
                    let n = (n_factor * (self.r_star * (self.d1 + self.d2)) as f64).ceil()
                        as usize;
                    for rep in 0..self.seeds {
                        out.push(SweepCell {
                            rho,
                            lambda,
                            n_factor,
                            rep,
                            instance_seed: self
                                .base_seed
                                .wrapping_add(cell_idx.wrapping_mul(10_007))
                                .wrapping_add(rep),
                            n,
                        });
                    }
                    cell_idx += 1;
                }
            }
        }
        out
    }
}

pub fn parse_generate_config(text: &str) -> anyhow::Result<GenerateConfig> {
    let cfg: GenerateConfig = serde_json::from_str(text).context("invalid generate config")?;
    if cfg.spectrum.len() != cfg.r_star {
        bail!(
            "spectrum has {} entries but r_star = {}",
            cfg.spectrum.len(),
            cfg.r_star
        );
    }
    cfg.measurement_count()?;
    Ok(cfg)
}

/// Hard cap on the number of sweep cells a config may request.
pub const MAX_SWEEP_CELLS: u64 = 100_000;

pub fn parse_sweep_config(text: &str) -> anyhow::Result<SweepConfig> {
    let cfg: SweepConfig = serde_json::from_str(text).context("invalid sweep config")?;
    if cfg.spectrum.len() != cfg.r_star {
        bail!(
            "spectrum has {} entries but r_star = {}",
            cfg.spectrum.len(),
            cfg.r_star
        );
    }
    if cfg.rip_samples == 0 {
        bail!("rip_samples must be >= 1");
    }
    let grid = (cfg.rho_grid.len() * cfg.lambda_grid.len() * cfg.n_factor_grid.len()) as u64;
    let total = grid.saturating_mul(cfg.seeds);
    if total > MAX_SWEEP_CELLS {
        bail!("sweep would run {total} cells (cap {MAX_SWEEP_CELLS})");
    }
    Ok(cfg)
}

pub fn load_generate_config(path: &std::path::Path) -> anyhow::Result<GenerateConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    parse_generate_config(&text)
}

pub fn load_sweep_config(path: &std::path::Path) -> anyhow::Result<SweepConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    parse_sweep_config(&text)
}
