use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use boltzlab_cli::config::ExperimentConfig;
use boltzlab_cli::manifest::RunManifest;
use boltzlab_cli::stages::Stage;
use boltzlab_cli::{enabled_stages, execute, report};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "boltzlab", version, about = "Stationary Boltzmann forward and inverse experiments")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every enabled stage in order.
    Run { config: PathBuf },
    /// Geometry and collision verification suites.
    Verify { config: PathBuf },
    /// Picard solve and outgoing trace.
    Forward { config: PathBuf },
    /// Finite-difference cross-check of the second linearization.
    Linearize { config: PathBuf },
    /// Mollified probes, η-extrapolation and kernel recovery.
    Reconstruct { config: PathBuf },
    /// Rebuild summary.txt for a finished run directory.
    Report { run_dir: PathBuf },
}

fn load(path: &Path, cli: &Cli) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    let dir = cfg.out.clone();
    Ok((cfg, dir))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let (config, stages): (&PathBuf, Vec<Stage>) = match &cli.command {
        Command::Report { run_dir } => {
            print!("{}", report::summarize(run_dir)?);
            if let Ok(mut m) = RunManifest::load(run_dir) {
                m.write(run_dir)?;
            }
            return Ok(());
        }
        Command::Run { config } => (config, vec![]),
        Command::Verify { config } => (config, vec![Stage::VerifyGeometry, Stage::VerifyCollision]),
        Command::Forward { config } => (config, vec![Stage::Forward]),
        Command::Linearize { config } => (config, vec![Stage::Linearize]),
        Command::Reconstruct { config } => (config, vec![Stage::Reconstruct]),
    };
    let (cfg, dir) = load(config, &cli)?;
    let stages = if stages.is_empty() { enabled_stages(&cfg) } else { stages };
    let manifest = execute(&cfg, &stages, &dir)?;
    println!("{} stages completed; manifest at {}", manifest.stages.len(), dir.join("manifest.json").display());
    Ok(())
}
