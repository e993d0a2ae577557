//! `mgtrade eval`: run with frozen checkpoints; weights never update.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use mgtrade::agents::AgentRegistry;
use mgtrade::sim::{run_with_agents, World};

use crate::commands::load_run_config;
use crate::commands::train::{add_trace_inputs, apply_overrides};
use crate::manifest::{prepare_out_dir, RunManifest};

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Directory holding mg{i}_{kind}.json checkpoints (a train run's
    /// `checkpoints/`).
    #[arg(long)]
    pub checkpoints: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub force: bool,
}

pub fn run(args: EvalArgs) -> Result<i32> {
    let mut config = load_run_config(&args.config)?;
    apply_overrides(&mut config, args.seed, args.mode.as_deref())?;
    prepare_out_dir(&args.out, args.force)?;

    let registry = AgentRegistry::default();
    let norm = World::build(&config)?.norm;
    let mut agents = Vec::with_capacity(config.sim.n_mgs);
    let mut checkpoint_files = Vec::new();
    for mg in 0..config.sim.n_mgs {
        let prefix = format!("mg{mg}_");
        let mut found = None;
        for entry in std::fs::read_dir(&args.checkpoints)
            .with_context(|| format!("listing {}", args.checkpoints.display()))?
        {
            let path = entry?.path();
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned());
            if let Some(name) = name {
                if name.starts_with(&prefix) && name.ends_with(".json") {
                    found = Some(path);
                    break;
                }
            }
        }
        let Some(path) = found else {
            bail!(
                "no checkpoint for MG {mg} in {} (expected {prefix}*.json)",
                args.checkpoints.display()
            );
        };
        let ctx = mgtrade::agents::AgentContext {
            mg,
            n_mgs: config.sim.n_mgs,
            trade_cap: config.sim.trade_cap,
            levels: config.levels(),
            beta: config.sim.beta,
            norm: norm[mg],
            dqn: config.dqn,
            qtable: config.qtable,
            init_seed: 0,
        };
        let mut agent = registry
            .load(&path, &ctx)
            .with_context(|| format!("loading {}", path.display()))?;
        agent.set_training(false);
        agents.push(agent);
        checkpoint_files.push(path);
    }

    let (outcome, _) = run_with_agents(&config, agents)?;

    let metrics_path = args.out.join("metrics.csv");
    outcome.metrics.write_csv_file(&metrics_path)?;
    let summary_path = args.out.join("summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&outcome.summary)?,
    )?;

    let mut manifest = RunManifest::new(
        "eval",
        Some(config.sim.seed),
        serde_json::to_value(&config)?,
    );
    manifest.add_input(&args.config)?;
    for path in &checkpoint_files {
        manifest.add_input(path)?;
    }
    add_trace_inputs(&mut manifest, &config)?;
    manifest.add_output(&metrics_path)?;
    manifest.add_output(&summary_path)?;
    manifest.write(&args.out)?;

    println!(
        "evaluated {} days; post-burn-in mean utility {:.3}",
        config.sim.days, outcome.summary.mean_utility_post
    );
    Ok(0)
}
