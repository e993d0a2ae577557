//! `mgtrade train`: run the trading loop with learning agents, then write
//! metrics, checkpoints, and the manifest.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;

use mgtrade::game::SettlementMode;
use mgtrade::sim::{run_returning_agents, RunConfig, TraceSource};

use crate::commands::load_run_config;
use crate::manifest::{prepare_out_dir, RunManifest};

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the settlement mode (direct|residual).
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub force: bool,
}

pub fn apply_overrides(
    config: &mut RunConfig,
    seed: Option<u64>,
    mode: Option<&str>,
) -> Result<()> {
    if let Some(seed) = seed {
        config.sim.seed = seed;
    }
    if let Some(mode) = mode {
        config.sim.settlement = match mode {
            "direct" => SettlementMode::Direct,
            "residual" => SettlementMode::Residual,
            other => anyhow::bail!("unknown settlement mode {other:?}"),
        };
    }
    Ok(())
}

/// Adds the CSV trace files (when used) as manifest inputs.
pub fn add_trace_inputs(manifest: &mut RunManifest, config: &RunConfig) -> Result<()> {
    if let TraceSource::Csv {
        wind,
        demand,
        price,
        ..
    } = &config.traces
    {
        for path in wind.iter().chain(demand).chain(std::iter::once(price)) {
            manifest.add_input(path)?;
        }
    }
    Ok(())
}

pub fn run(args: TrainArgs) -> Result<i32> {
    let mut config = load_run_config(&args.config)?;
    apply_overrides(&mut config, args.seed, args.mode.as_deref())?;
    prepare_out_dir(&args.out, args.force)?;

    let (outcome, agents) = run_returning_agents(&config)?;

    let metrics_path = args.out.join("metrics.csv");
    outcome.metrics.write_csv_file(&metrics_path)?;
    let summary_path = args.out.join("summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&outcome.summary)?,
    )?;

    let checkpoint_dir = args.out.join("checkpoints");
    std::fs::create_dir_all(&checkpoint_dir)?;
    let mut checkpoint_files = Vec::new();
    for (mg, agent) in agents.iter().enumerate() {
        let path = checkpoint_path(&checkpoint_dir, mg, agent.kind());
        agent
            .save(&path)
            .with_context(|| format!("saving checkpoint for MG {mg}"))?;
        checkpoint_files.push(path);
    }

    let mut manifest = RunManifest::new(
        "train",
        Some(config.sim.seed),
        serde_json::to_value(&config)?,
    );
    manifest.add_input(&args.config)?;
    add_trace_inputs(&mut manifest, &config)?;
    manifest.add_output(&metrics_path)?;
    manifest.add_output(&summary_path)?;
    for path in &checkpoint_files {
        manifest.add_output(path)?;
        let weights = path.with_extension("weights.bin");
        if weights.exists() {
            manifest.add_output(&weights)?;
        }
    }
    manifest.write(&args.out)?;

    println!(
        "trained {} days x {} slots; post-burn-in mean utility {:.3}",
        config.sim.days, config.sim.slots_per_day, outcome.summary.mean_utility_post
    );
    Ok(0)
}

pub fn checkpoint_path(dir: &Path, mg: usize, kind: &str) -> PathBuf {
    dir.join(format!("mg{mg}_{kind}.json"))
}
