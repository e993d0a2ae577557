//! Policy that replays the closed-form equilibrium intent each slot.
//!
//! The row comes from the deterministic three-MG closed form evaluated at
//! the current estimates, clamped to the trade cap. When the existence
//! condition fails the formula value is still emitted, but flagged.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Agent, AgentContext, Feedback, Observation};
use crate::equilibrium::{ne_deterministic, GameSpec, GAME_SIZE};
use crate::{Error, Result};

pub struct NeAgent {
    beta: f64,
    trade_cap: f64,
    clamp_events: u64,
    unverified_slots: u64,
}

impl NeAgent {
    pub fn new(beta: f64, trade_cap: f64) -> Self {
        NeAgent {
            beta,
            trade_cap,
            clamp_events: 0,
            unverified_slots: 0,
        }
    }

    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }

    pub fn unverified_slots(&self) -> u64 {
        self.unverified_slots
    }
}

impl Agent for NeAgent {
    fn kind(&self) -> &'static str {
        "ne"
    }

    fn act(&mut self, obs: &Observation, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        if obs.all_states.len() != GAME_SIZE {
            log::warn!("equilibrium policy needs exactly {GAME_SIZE} MGs; emitting no trade");
            return vec![0.0; obs.all_states.len().max(1)];
        }
        let nets = [0, 1, 2].map(|i| {
            let s = &obs.all_states[i];
            s.battery + s.generation_est - s.demand_est
        });
        let spec = match GameSpec::new(nets, self.beta, obs.rho, obs.price_ratio, self.trade_cap) {
            Ok(spec) => spec,
            Err(err) => {
                log::warn!("bad slot for equilibrium policy ({err}); emitting no trade");
                return vec![0.0; GAME_SIZE];
            }
        };
        let result = ne_deterministic(&spec);
        if !result.exists {
            self.unverified_slots += 1;
        }
        result
            .intents
            .row(obs.mg)
            .iter()
            .map(|&v| {
                let clamped = v.clamp(-self.trade_cap, self.trade_cap);
                if clamped != v {
                    self.clamp_events += 1;
                }
                clamped
            })
            .collect()
    }

    fn learn(&mut self, _feedback: &Feedback, _rng: &mut ChaCha8Rng) -> Result<()> {
        Ok(())
    }

    fn set_training(&mut self, _on: bool) {}

    fn save(&self, path: &Path) -> Result<()> {
        let checkpoint = NeCheckpoint {
            kind: "ne".into(),
            beta: self.beta,
            trade_cap: self.trade_cap,
            clamp_events: self.clamp_events,
            unverified_slots: self.unverified_slots,
        };
        let text = serde_json::to_string_pretty(&checkpoint)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NeCheckpoint {
    kind: String,
    beta: f64,
    trade_cap: f64,
    clamp_events: u64,
    unverified_slots: u64,
}

pub fn build(ctx: &AgentContext) -> Result<Box<dyn Agent>> {
    if ctx.n_mgs != GAME_SIZE {
        return Err(Error::Config(format!(
            "the equilibrium policy is defined for {GAME_SIZE} MGs, config has {}",
            ctx.n_mgs
        )));
    }
    Ok(Box::new(NeAgent::new(ctx.beta, ctx.trade_cap)))
}

pub fn load(path: &Path, ctx: &AgentContext) -> Result<Box<dyn Agent>> {
    let text = std::fs::read_to_string(path)?;
    let checkpoint: NeCheckpoint =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if ctx.n_mgs != GAME_SIZE {
        return Err(Error::Config(
            "the equilibrium policy needs a 3-MG game".into(),
        ));
    }
    Ok(Box::new(NeAgent::new(
        checkpoint.beta,
        checkpoint.trade_cap,
    )))
}
