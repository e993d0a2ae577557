//! Run configuration: one JSON document covers the simulation parameters,
//! learning hyperparameters, action quantization, and trace sources.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::agents::{ActionCodec, DqnConfig, QTableConfig};
use crate::game::SettlementMode;
use crate::traces::{SynthProfile, TurbineCurve, DEFAULT_ESTIMATION_WINDOW_DAYS};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub n_mgs: usize,
    pub slots_per_day: usize,
    pub days: usize,
    pub battery_capacity: f64,
    pub battery_initial: f64,
    pub trade_cap: f64,
    pub beta: f64,
    pub price_ratio: f64,
    /// Generation estimation accuracy (the probability of an exact estimate).
    pub accuracy: f64,
    /// Generation estimation error magnitude.
    pub delta: f64,
    pub settlement: SettlementMode,
    pub seed: u64,
    /// Online-learning warm-up excluded from the post-burn-in aggregates.
    pub burn_in_days: usize,
    pub estimation_window_days: usize,
    /// Per-MG policy names, resolved through the agent registry.
    pub agents: Vec<String>,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            n_mgs: 3,
            slots_per_day: 6,
            days: 60,
            battery_capacity: 500.0,
            battery_initial: 250.0,
            trade_cap: 50.0,
            beta: 120.0,
            price_ratio: 0.3,
            accuracy: 0.8,
            delta: 10.0,
            settlement: SettlementMode::Residual,
            seed: 7,
            burn_in_days: 50,
            estimation_window_days: DEFAULT_ESTIMATION_WINDOW_DAYS,
            agents: vec!["dqn".into(), "dqn".into(), "dqn".into()],
        }
    }
}

/// Where the generation, demand, and price series come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    /// Bundled synthetic traces; the engine generates enough history for
    /// estimation on top of the simulated days.
    Synth {
        seed: u64,
        #[serde(default)]
        profile: SynthProfile,
        #[serde(default)]
        turbine: TurbineCurve,
    },
    /// CSV files per MG and kind; they must carry at least one day of
    /// history beyond the simulated days.
    Csv {
        wind: Vec<PathBuf>,
        demand: Vec<PathBuf>,
        price: PathBuf,
        #[serde(default)]
        turbine: TurbineCurve,
    },
}

impl Default for TraceSource {
    fn default() -> Self {
        TraceSource::Synth {
            seed: 1,
            profile: SynthProfile::default(),
            turbine: TurbineCurve::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub sim: SimParams,
    pub dqn: DqnConfig,
    pub qtable: QTableConfig,
    /// Action quantization levels; defaults to five symmetric levels
    /// spanning the trade cap.
    pub codec_levels: Option<Vec<f64>>,
    pub traces: TraceSource,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn levels(&self) -> Vec<f64> {
        self.codec_levels
            .clone()
            .unwrap_or_else(|| ActionCodec::default_levels(self.sim.trade_cap))
    }

    /// Fail-fast validation of everything checkable before touching traces.
    pub fn validate(&self) -> Result<()> {
        let sim = &self.sim;
        if sim.n_mgs < 2 {
            return Err(Error::Config("need at least two MGs".into()));
        }
        if sim.slots_per_day == 0 || 24 % sim.slots_per_day != 0 {
            return Err(Error::Config(format!(
                "slots_per_day must divide 24, got {}",
                sim.slots_per_day
            )));
        }
        if sim.days == 0 {
            return Err(Error::Config("days must be >= 1".into()));
        }
        if !(sim.battery_capacity > 0.0 && sim.trade_cap > 0.0 && sim.beta > 0.0) {
            return Err(Error::Config(
                "battery capacity, trade cap, and beta must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&sim.accuracy) || sim.delta < 0.0 {
            return Err(Error::Config(
                "estimation model parameters out of range".into(),
            ));
        }
        if !(sim.price_ratio > 0.0 && sim.price_ratio < 1.0) {
            return Err(Error::Config(format!(
                "price ratio {} outside (0, 1)",
                sim.price_ratio
            )));
        }
        if !(0.0..=sim.battery_capacity).contains(&sim.battery_initial) {
            return Err(Error::Config(
                "initial battery level outside [0, capacity]".into(),
            ));
        }
        if sim.burn_in_days >= sim.days {
            return Err(Error::Config(format!(
                "burn-in of {} days leaves nothing of a {}-day run",
                sim.burn_in_days, sim.days
            )));
        }
        if sim.estimation_window_days == 0 {
            return Err(Error::Config("estimation window must be >= 1 day".into()));
        }
        if sim.agents.len() != sim.n_mgs {
            return Err(Error::Config(format!(
                "{} agent assignments for {} MGs",
                sim.agents.len(),
                sim.n_mgs
            )));
        }
        let levels = self.levels();
        let codec = ActionCodec::new(levels.clone(), sim.n_mgs)?;
        if codec.max_magnitude() > sim.trade_cap {
            return Err(Error::Config(format!(
                "codec level magnitude {} exceeds the trade cap {}",
                codec.max_magnitude(),
                sim.trade_cap
            )));
        }
        self.dqn.validate()?;
        self.qtable.validate()?;
        if let TraceSource::Csv { wind, demand, .. } = &self.traces {
            if wind.len() != sim.n_mgs || demand.len() != sim.n_mgs {
                return Err(Error::Config(format!(
                    "need one wind and one demand trace per MG ({} MGs, {} wind, {} demand)",
                    sim.n_mgs,
                    wind.len(),
                    demand.len()
                )));
            }
        }
        Ok(())
    }
}
