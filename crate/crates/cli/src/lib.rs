//! Config-driven experiment runner: verification suites, forward solve,
//! linearization cross-check and reconstruction sweeps, with CSV output and
//! a hashed manifest per run directory.

pub mod config;
pub mod manifest;
pub mod report;
pub mod stages;

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Result};

use config::ExperimentConfig;
use manifest::{unix_now, RunManifest, StageRecord, StageStatus};
use stages::{run_stage, Stage};

/// Runs `stages` in order into `dir`, halting at the first failure. The
/// summary and the manifest are written in every case; a failure is
/// returned after they are on disk.
pub fn execute(cfg: &ExperimentConfig, stages: &[Stage], dir: &Path) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    let hash = cfg.hash()?;
    // a re-run of single stages with the same config extends the manifest
    let mut manifest = match RunManifest::load(dir) {
        Ok(m) if m.config_hash == hash => m,
        _ => RunManifest { config_hash: hash, seed: cfg.seed, started_unix: unix_now(), finished_unix: 0, stages: vec![], files: vec![] },
    };
    let mut failure = None;
    for &stage in stages {
        let record = if failure.is_some() {
            StageRecord { name: stage.name().into(), status: StageStatus::NotRun, diagnostic: None, files: vec![] }
        } else {
            log::info!("stage {}", stage.name());
            match run_stage(cfg, dir, stage) {
                Ok(files) => StageRecord { name: stage.name().into(), status: StageStatus::Completed, diagnostic: None, files },
                Err(e) => {
                    let msg = format!("{e:#}");
                    log::error!("stage {} failed: {msg}", stage.name());
                    failure = Some(anyhow!("stage {} failed: {msg}", stage.name()));
                    StageRecord { name: stage.name().into(), status: StageStatus::Failed, diagnostic: Some(msg), files: vec![] }
                }
            }
        };
        manifest.stages.retain(|s| s.name != record.name);
        manifest.stages.push(record);
    }
    manifest.stages.sort_by_key(|s| Stage::ORDER.iter().position(|o| o.name() == s.name));
    report::summarize(dir)?;
    manifest.write(dir)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

/// Every stage the config enables, in pipeline order.
pub fn enabled_stages(cfg: &ExperimentConfig) -> Vec<Stage> {
    Stage::ORDER.into_iter().filter(|s| s.enabled(cfg)).collect()
}
