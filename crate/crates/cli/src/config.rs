//! Experiment configuration (TOML).
//!
//! A stage runs when its table is present; the two verification stages are
//! toggled inside `[verify]`. Every key except `version`, `domain` and
//! `kernel` has a default.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use boltzlab::collision::{KernelSpec, RuleOrders};
use boltzlab::geometry::DomainSpec;
use boltzlab::reconstruct::{ExponentMode, MollifierOrders};
use boltzlab::solver::{SolverConfig, SourceSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub domain: DomainSpec,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    pub forward: Option<ForwardConfig>,
    pub linearize: Option<LinearizeConfig>,
    pub reconstruct: Option<ReconstructConfig>,
}

fn default_dimension() -> usize {
    2
}

fn default_out() -> PathBuf {
    PathBuf::from("runs/default")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub geometry: bool,
    pub collision: bool,
    /// Random samples per geometric suite.
    pub samples: usize,
    pub tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { geometry: true, collision: true, samples: 10_000, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardConfig {
    pub source: SourceSpec,
    /// Outgoing boundary samples in the trace table.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Also write every grid node of `F` (large).
    #[serde(default)]
    pub write_field: bool,
}

fn default_samples() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearizeConfig {
    pub g1: SourceSpec,
    pub g2: SourceSpec,
    #[serde(default = "default_eps")]
    pub eps: Vec<[f64; 2]>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Finer collision rule for the quadrature error estimate.
    #[serde(default = "default_refined")]
    pub refined: RuleOrders,
}

fn default_eps() -> Vec<[f64; 2]> {
    vec![[1e-2, 1e-2], [5e-3, 5e-3], [2.5e-3, 2.5e-3]]
}

fn default_refined() -> RuleOrders {
    RuleOrders { sphere: 24, radial: 12, angular: 24 }
}

/// Where the reconstruction stage takes `S` from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceRoute {
    /// Quadrature of the collision integral.
    #[default]
    Direct,
    /// Finite differences of the boundary map, read from the linearize stage.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Random `(a, b, θ)` in a cube, kept only when both Jacobian lengths
/// exceed `min_length` and the bump supports stay apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeGenerator {
    pub count: usize,
    pub half_width: f64,
    pub min_length: f64,
}

impl Default for ProbeGenerator {
    fn default() -> Self {
        Self { count: 20, half_width: 1.5, min_length: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    #[serde(default)]
    pub route: SourceRoute,
    /// Kernel probed by the reconstruction; defaults to the top-level one.
    pub kernel: Option<KernelSpec>,
    /// Coarsest mollifier width; the study halves it `levels − 1` times.
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_mode")]
    pub mode: ExponentMode,
    #[serde(default)]
    pub probes: Vec<ProbeSpec>,
    pub generate: Option<ProbeGenerator>,
    pub orders: Option<MollifierOrders>,
    /// Rows of the linearize table compared across the two routes.
    #[serde(default = "default_cross_check")]
    pub cross_check: usize,
}

fn default_eta() -> f64 {
    0.4
}

fn default_levels() -> usize {
    3
}

fn default_mode() -> ExponentMode {
    ExponentMode::SurfaceDensity
}

fn default_cross_check() -> usize {
    5
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// SHA-256 of the canonical serialisation, so formatting and key order
    /// of the source file do not matter.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            bail!("unsupported config version {} (expected {CONFIG_VERSION})", self.version);
        }
        ensure!(self.dimension == 2 || self.dimension == 3, "dimension must be 2 or 3, got {}", self.dimension);
        self.kernel.validate(self.dimension)?;
        let s = &self.solver;
        ensure!(s.grid.spatial >= 2 && s.grid.velocity >= 2, "grid needs at least two nodes per axis");
        ensure!(s.grid.velocity_radius > 0.0, "velocity_radius must be positive");
        ensure!(s.tol > 0.0 && s.smallness > 0.0 && s.max_iter > 0, "solver tol, smallness and max_iter must be positive");
        ensure!(self.verify.samples > 0 && self.verify.tol > 0.0, "verify samples and tol must be positive");
        if let Some(f) = &self.forward {
            ensure!(f.samples > 0, "forward.samples must be positive");
        }
        if let Some(l) = &self.linearize {
            ensure!(l.samples > 0, "linearize.samples must be positive");
            boltzlab::linearize::LinearizationConfig { eps: l.eps.iter().map(|e| (e[0], e[1])).collect() }.validate()?;
        }
        if let Some(r) = &self.reconstruct {
            ensure!(r.eta > 0.0, "reconstruct.eta must be positive");
            ensure!(r.levels >= 3, "reconstruct.levels must be at least 3 for extrapolation");
            if let Some(k) = &r.kernel {
                k.validate(self.dimension)?;
            }
            for p in &r.probes {
                let d = self.dimension;
                ensure!(p.a.len() == d && p.b.len() == d && p.theta.len() == d, "probe vectors must have {d} components");
            }
            ensure!(
                !r.probes.is_empty() || r.generate.as_ref().is_some_and(|g| g.count > 0),
                "reconstruct needs explicit probes or a generator"
            );
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
version = 1
[domain]
shape = "ball"
radius = 1.0
[kernel]
family = "constant"
value = 0.01
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.dimension, 2);
        assert!(cfg.verify.geometry && cfg.forward.is_none());
        assert_eq!(cfg.solver, SolverConfig::default());
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        let bad = MINIMAL.replace("version = 1", "version = 1\nflavour = 3");
        assert!(toml::from_str::<ExperimentConfig>(&bad).is_err());
        let cfg: ExperimentConfig = toml::from_str(&MINIMAL.replace("version = 1", "version = 2")).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_ignores_formatting() {
        let a: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        let b: ExperimentConfig = toml::from_str(&MINIMAL.replace("radius = 1.0", "radius   =  1.0 # unit disk")).unwrap();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
    }
}
