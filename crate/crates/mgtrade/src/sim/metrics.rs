//! Per-slot metrics rows, CSV serialization, and aggregate summaries.
//!
//! Aggregates are always recomputed from the raw rows; there is no hidden
//! state to drift out of sync.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

pub const CSV_HEADER: &str =
    "day,slot,mg,utility,plant_trade,mg_trade_volume,curtailed,shortfall,price_rho";

/// One MG's record for one slot. `day` counts from 0 at the start of the
/// simulated period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotRow {
    pub day: usize,
    pub slot: usize,
    pub mg: usize,
    pub utility: f64,
    pub plant_trade: f64,
    pub mg_trade_volume: f64,
    pub curtailed: f64,
    pub shortfall: f64,
    pub price_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<SlotRow>,
    /// Gain-argument clamps observed while evaluating utilities.
    pub gain_clamp_events: u64,
    /// Negative generation draws clamped to zero.
    pub generation_clamp_events: u64,
}

impl MetricsTable {
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.day,
                r.slot,
                r.mg,
                r.utility,
                r.plant_trade,
                r.mg_trade_volume,
                r.curtailed,
                r.shortfall,
                r.price_rho
            )?;
        }
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn summary(&self, burn_in_days: usize, slots_per_day: usize) -> RunSummary {
        let n_mgs = self.rows.iter().map(|r| r.mg + 1).max().unwrap_or(0);
        let days = self.rows.iter().map(|r| r.day + 1).max().unwrap_or(0);
        let mut per_mg = Vec::with_capacity(n_mgs);
        for mg in 0..n_mgs {
            let all: Vec<&SlotRow> = self.rows.iter().filter(|r| r.mg == mg).collect();
            let burn: Vec<&&SlotRow> = all.iter().filter(|r| r.day < burn_in_days).collect();
            let post: Vec<&&SlotRow> = all.iter().filter(|r| r.day >= burn_in_days).collect();
            per_mg.push(MgSummary {
                mg,
                mean_utility: mean(all.iter().map(|r| r.utility)),
                mean_utility_burn_in: mean(burn.iter().map(|r| r.utility)),
                mean_utility_post: mean(post.iter().map(|r| r.utility)),
                mean_abs_plant_trade_post: mean(post.iter().map(|r| r.plant_trade.abs())),
                mean_mg_trade_volume_post: mean(post.iter().map(|r| r.mg_trade_volume)),
                total_curtailed: all.iter().map(|r| r.curtailed).sum(),
                total_shortfall: all.iter().map(|r| r.shortfall).sum(),
            });
        }

        let post_rows: Vec<&SlotRow> = self.rows.iter().filter(|r| r.day >= burn_in_days).collect();
        let mut by_slot = Vec::with_capacity(slots_per_day);
        for slot in 0..slots_per_day {
            let rows: Vec<&&SlotRow> = post_rows.iter().filter(|r| r.slot == slot).collect();
            by_slot.push(SlotAggregate {
                slot,
                mean_utility: mean(rows.iter().map(|r| r.utility)),
                mean_abs_plant_trade: mean(rows.iter().map(|r| r.plant_trade.abs())),
                mean_price_rho: mean(rows.iter().map(|r| r.price_rho)),
            });
        }

        RunSummary {
            days,
            slots_per_day,
            burn_in_days,
            mean_utility_post: mean(post_rows.iter().map(|r| r.utility)),
            mean_abs_plant_trade_post: mean(post_rows.iter().map(|r| r.plant_trade.abs())),
            per_mg,
            by_slot,
            gain_clamp_events: self.gain_clamp_events,
            generation_clamp_events: self.generation_clamp_events,
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgSummary {
    pub mg: usize,
    pub mean_utility: f64,
    pub mean_utility_burn_in: f64,
    pub mean_utility_post: f64,
    pub mean_abs_plant_trade_post: f64,
    pub mean_mg_trade_volume_post: f64,
    pub total_curtailed: f64,
    pub total_shortfall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotAggregate {
    pub slot: usize,
    pub mean_utility: f64,
    pub mean_abs_plant_trade: f64,
    pub mean_price_rho: f64,
}

/// Aggregates of one run; burn-in and post-burn-in reported separately
/// because learning happens online.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub days: usize,
    pub slots_per_day: usize,
    pub burn_in_days: usize,
    pub mean_utility_post: f64,
    pub mean_abs_plant_trade_post: f64,
    pub per_mg: Vec<MgSummary>,
    pub by_slot: Vec<SlotAggregate>,
    pub gain_clamp_events: u64,
    pub generation_clamp_events: u64,
}
