//! `mgtrade sweep`: grid over battery capacity and price ratio, one metrics
//! file per cell and seed, plus a combined summary.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use mgtrade::sim::{run_experiment, RunSummary};

use crate::commands::train::{add_trace_inputs, apply_overrides};
use crate::commands::{load_run_config, parse_list};
use crate::manifest::{prepare_out_dir, RunManifest};

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Battery capacities, comma separated (kWh).
    #[arg(long, default_value = "400,600")]
    pub battery: String,
    /// Price ratios, comma separated.
    #[arg(long, default_value = "0.1,0.5")]
    pub ratio: String,
    /// Seeds, comma separated; defaults to the config seed.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Serialize)]
struct CellSummary {
    battery_capacity: f64,
    price_ratio: f64,
    seed: u64,
    metrics_file: String,
    summary: RunSummary,
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    batteries: Vec<f64>,
    ratios: Vec<f64>,
    seeds: Vec<u64>,
    cells: Vec<CellSummary>,
}

pub fn run(args: SweepArgs) -> Result<i32> {
    let mut base = load_run_config(&args.config)?;
    apply_overrides(&mut base, None, args.mode.as_deref())?;
    let batteries: Vec<f64> = parse_list(&args.battery, "battery capacity")?;
    let ratios: Vec<f64> = parse_list(&args.ratio, "price ratio")?;
    let seeds: Vec<u64> = match &args.seeds {
        Some(text) => parse_list(text, "seed")?,
        None => vec![base.sim.seed],
    };
    prepare_out_dir(&args.out, args.force)?;

    let mut jobs = Vec::new();
    for &battery in &batteries {
        for &ratio in &ratios {
            for &seed in &seeds {
                jobs.push((battery, ratio, seed));
            }
        }
    }

    // isolated runs; cells execute concurrently
    let cells: Vec<CellSummary> = jobs
        .par_iter()
        .map(|&(battery, ratio, seed)| {
            let mut config = base.clone();
            config.sim.battery_capacity = battery;
            config.sim.battery_initial = config.sim.battery_initial.min(battery / 2.0);
            config.sim.price_ratio = ratio;
            config.sim.seed = seed;
            config.validate()?;
            let outcome = run_experiment(&config)?;
            let file = format!("metrics_b{battery}_eps{ratio}_seed{seed}.csv");
            outcome.metrics.write_csv_file(&args.out.join(&file))?;
            Ok(CellSummary {
                battery_capacity: battery,
                price_ratio: ratio,
                seed,
                metrics_file: file,
                summary: outcome.summary,
            })
        })
        .collect::<mgtrade::Result<Vec<_>>>()?;

    let summary = SweepSummary {
        batteries,
        ratios,
        seeds,
        cells,
    };
    let summary_path = args.out.join("sweep_summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;

    let mut manifest = RunManifest::new("sweep", Some(base.sim.seed), serde_json::to_value(&base)?);
    manifest.add_input(&args.config)?;
    add_trace_inputs(&mut manifest, &base)?;
    for cell in &summary.cells {
        manifest.add_output(&args.out.join(&cell.metrics_file))?;
    }
    manifest.add_output(&summary_path)?;
    manifest.write(&args.out)?;

    println!(
        "swept {} cells ({} batteries x {} ratios x {} seeds)",
        summary.cells.len(),
        summary.batteries.len(),
        summary.ratios.len(),
        summary.seeds.len()
    );
    Ok(0)
}
