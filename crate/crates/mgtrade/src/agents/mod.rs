//! Trading policies behind one agent contract.
//!
//! Every policy implements [`Agent`]; the [`AgentRegistry`] maps policy names
//! ("dqn", "qtable", "random", "ne") to constructors and checkpoint loaders,
//! so runs select their per-MG policies at runtime from configuration.
//!
//! Each agent instance is single-owner mutable state; distinct agents may act
//! concurrently within a slot, and settlement afterwards is the
//! synchronization point.

pub mod codec;
pub mod dqn;
pub mod ne_policy;
pub mod qtable;
pub mod random;
pub mod replay;
pub mod sequence;

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use codec::ActionCodec;
pub use dqn::{DqnAgent, DqnConfig};
pub use ne_policy::NeAgent;
pub use qtable::{QTableAgent, QTableConfig};
pub use random::RandomAgent;
pub use sequence::{encode_sequence, ExperienceSequence, NormRanges};

use crate::{Error, Result};

/// What one MG can observe at decision time: its own estimates and battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotState {
    pub demand_est: f64,
    pub generation_est: f64,
    pub battery: f64,
}

impl SlotState {
    pub fn as_array(&self) -> [f64; 3] {
        [self.demand_est, self.generation_est, self.battery]
    }
}

/// Everything handed to an agent when it must pick an intent row.
///
/// `all_states` carries every MG's observable state; learning agents use only
/// their own entry, while the equilibrium-replay policy needs the full view.
#[derive(Debug, Clone)]
pub struct Observation {
    pub mg: usize,
    pub day: usize,
    pub slot: usize,
    pub state: SlotState,
    pub all_states: Vec<SlotState>,
    pub rho: f64,
    pub price_ratio: f64,
}

/// Post-settlement feedback for online learning.
#[derive(Debug, Clone)]
pub struct Feedback {
    pub utility: f64,
    pub next_state: SlotState,
}

/// The common policy contract.
pub trait Agent {
    fn kind(&self) -> &'static str;

    /// Picks the MG's intent row for this slot (entry `mg` is the plant).
    fn act(&mut self, obs: &Observation, rng: &mut ChaCha8Rng) -> Vec<f64>;

    /// Receives the realized utility and the next observable state.
    fn learn(&mut self, feedback: &Feedback, rng: &mut ChaCha8Rng) -> Result<()>;

    /// Enables or disables learning; acting is unaffected.
    fn set_training(&mut self, on: bool);

    /// Serializes the agent to `path` (JSON, with a sidecar weight file for
    /// network-backed agents).
    fn save(&self, path: &Path) -> Result<()>;
}

/// Construction context shared by all policy factories.
#[derive(Debug, Clone)]
pub struct AgentContext {
    pub mg: usize,
    pub n_mgs: usize,
    pub trade_cap: f64,
    pub levels: Vec<f64>,
    pub beta: f64,
    pub norm: NormRanges,
    pub dqn: DqnConfig,
    pub qtable: QTableConfig,
    /// Seed for weight initialization; derive one per MG.
    pub init_seed: u64,
}

impl AgentContext {
    pub fn codec(&self) -> Result<ActionCodec> {
        ActionCodec::new(self.levels.clone(), self.n_mgs)
    }
}

type BuildFn = fn(&AgentContext) -> Result<Box<dyn Agent>>;
type LoadFn = fn(&Path, &AgentContext) -> Result<Box<dyn Agent>>;

struct AgentFactory {
    build: BuildFn,
    load: LoadFn,
}

/// Name-indexed policy registry.
pub struct AgentRegistry {
    factories: BTreeMap<&'static str, AgentFactory>,
}

impl AgentRegistry {
    pub fn empty() -> Self {
        AgentRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, build: BuildFn, load: LoadFn) {
        self.factories.insert(name, AgentFactory { build, load });
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, kind: &str, ctx: &AgentContext) -> Result<Box<dyn Agent>> {
        let factory = self.factories.get(kind).ok_or_else(|| {
            Error::Config(format!(
                "unknown agent kind {kind:?}; known: {:?}",
                self.names()
            ))
        })?;
        (factory.build)(ctx)
    }

    /// Loads a checkpoint written by [`Agent::save`]; the file's `kind` field
    /// picks the loader.
    pub fn load(&self, path: &Path, ctx: &AgentContext) -> Result<Box<dyn Agent>> {
        let text = std::fs::read_to_string(path)?;
        let probe: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        let kind = probe
            .get("kind")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Checkpoint("checkpoint lacks a kind field".into()))?;
        let factory = self.factories.get(kind).ok_or_else(|| {
            Error::Checkpoint(format!("no loader registered for agent kind {kind:?}"))
        })?;
        (factory.load)(path, ctx)
    }
}

impl Default for AgentRegistry {
    fn default() -> Self {
        let mut registry = AgentRegistry::empty();
        registry.register("dqn", dqn::build, dqn::load);
        registry.register("qtable", qtable::build, qtable::load);
        registry.register("random", random::build, random::load);
        registry.register("ne", ne_policy::build, ne_policy::load);
        registry
    }
}

/// Epsilon-greedy action choice: the argmax with probability
/// `1 - exploration`, otherwise uniform over the remaining indices (each
/// with probability `exploration / (A - 1)`). Argmax ties break to the
/// lowest index.
pub fn select_action(q_values: &[f64], exploration: f64, rng: &mut impl Rng) -> usize {
    assert!(q_values.len() >= 2, "need at least two actions");
    let mut best = 0usize;
    for (i, &v) in q_values.iter().enumerate() {
        if v > q_values[best] {
            best = i;
        }
    }
    if exploration > 0.0 && rng.gen::<f64>() < exploration {
        let other = rng.gen_range(0..q_values.len() - 1);
        if other >= best {
            other + 1
        } else {
            other
        }
    } else {
        best
    }
}
