//! `mgtrade synth`: write bundled synthetic traces as CSV files.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use mgtrade::traces::{synth_traces, write_trace, SynthProfile};

use crate::manifest::{prepare_out_dir, RunManifest};

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Days to generate; leave room for the estimation window when the
    /// traces feed a simulation.
    #[arg(long, default_value_t = 37)]
    pub days: usize,
    #[arg(long, default_value_t = 6)]
    pub slots: usize,
    #[arg(long, default_value_t = 3)]
    pub mgs: usize,
    /// Optional profile JSON overriding the built-in shapes.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

pub fn run(args: SynthArgs) -> Result<i32> {
    let profile: SynthProfile = match &args.profile {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => SynthProfile::default(),
    };
    prepare_out_dir(&args.out, args.force)?;

    let bundle = synth_traces(args.seed, args.days, args.slots, args.mgs, &profile)?;
    let mut manifest = RunManifest::new("synth", Some(args.seed), serde_json::to_value(&profile)?);
    if let Some(path) = &args.profile {
        manifest.add_input(path)?;
    }

    for (mg, series) in bundle.wind_speed.iter().enumerate() {
        let path = args.out.join(format!("wind_mg{mg}.csv"));
        write_trace(series, &path)?;
        manifest.add_output(&path)?;
    }
    for (mg, series) in bundle.demand.iter().enumerate() {
        let path = args.out.join(format!("demand_mg{mg}.csv"));
        write_trace(series, &path)?;
        manifest.add_output(&path)?;
    }
    let price_path = args.out.join("price.csv");
    write_trace(&bundle.price, &price_path)?;
    manifest.add_output(&price_path)?;
    manifest.write(&args.out)?;

    println!(
        "wrote {} wind, {} demand, and 1 price trace ({} days x {} slots)",
        bundle.wind_speed.len(),
        bundle.demand.len(),
        args.days,
        args.slots
    );
    Ok(0)
}
