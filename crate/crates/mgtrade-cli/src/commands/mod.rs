pub mod eval;
pub mod nash;
pub mod sweep;
pub mod synth;
pub mod train;

use std::path::Path;

use anyhow::{Context, Result};
use mgtrade::sim::RunConfig;

/// Reads and validates a run configuration document.
pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    RunConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Comma-separated list parser for sweep axes.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| anyhow::anyhow!("bad {what} entry {s:?}: {e}"))
        })
        .collect()
}
