//! Tabular Q-learning policy over a binned (demand, generation, battery)
//! state and the same quantized action space as the network agent.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::codec::ActionCodec;
use super::select_action;
use super::{Agent, AgentContext, Feedback, Observation};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QTableConfig {
    pub learning_rate: f64,
    pub discount: f64,
    pub exploration: f64,
    /// Bin counts for demand, generation, and battery.
    pub bins: [usize; 3],
}

impl Default for QTableConfig {
    fn default() -> Self {
        QTableConfig {
            learning_rate: 0.1,
            discount: 0.9,
            exploration: 0.1,
            bins: [4, 4, 4],
        }
    }
}

impl QTableConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.discount) || !(0.0..1.0).contains(&self.learning_rate) {
            return Err(Error::Config("q-table rates outside their ranges".into()));
        }
        if self.bins.iter().any(|b| *b == 0) {
            return Err(Error::Config(
                "every state dimension needs at least one bin".into(),
            ));
        }
        Ok(())
    }
}

/// Bare Bellman-update table, independent of any state encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub n_states: usize,
    pub n_actions: usize,
    pub values: Vec<f64>,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        QTable {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Q(s,a) <- (1 - alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a'))`
    pub fn update(
        &mut self,
        state: usize,
        action: usize,
        reward: f64,
        next_state: usize,
        alpha: f64,
        gamma: f64,
    ) {
        let target = reward + gamma * self.max_value(next_state);
        let cell = &mut self.values[state * self.n_actions + action];
        *cell = (1.0 - alpha) * *cell + alpha * target;
    }
}

/// Uniform binning of the three observable scalars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    pub highs: [f64; 3],
    pub bins: [usize; 3],
}

impl Discretizer {
    pub fn index(&self, state: [f64; 3]) -> usize {
        let mut idx = 0usize;
        for d in 0..3 {
            let frac = (state[d] / self.highs[d]).clamp(0.0, 1.0);
            let bin = ((frac * self.bins[d] as f64) as usize).min(self.bins[d] - 1);
            idx = idx * self.bins[d] + bin;
        }
        idx
    }

    pub fn state_count(&self) -> usize {
        self.bins.iter().product()
    }
}

pub struct QTableAgent {
    config: QTableConfig,
    codec: ActionCodec,
    discretizer: Discretizer,
    table: QTable,
    pending: Option<(usize, usize)>,
    training: bool,
}

impl QTableAgent {
    pub fn new(config: QTableConfig, codec: ActionCodec, discretizer: Discretizer) -> Result<Self> {
        config.validate()?;
        let table = QTable::new(discretizer.state_count(), codec.action_count());
        Ok(QTableAgent {
            config,
            codec,
            discretizer,
            table,
            pending: None,
            training: true,
        })
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }
}

impl Agent for QTableAgent {
    fn kind(&self) -> &'static str {
        "qtable"
    }

    fn act(&mut self, obs: &Observation, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let state = self.discretizer.index(obs.state.as_array());
        let action = select_action(self.table.row(state), self.config.exploration, rng);
        self.pending = Some((state, action));
        self.codec.decode(action)
    }

    fn learn(&mut self, feedback: &Feedback, _rng: &mut ChaCha8Rng) -> Result<()> {
        if !self.training {
            self.pending = None;
            return Ok(());
        }
        if let Some((state, action)) = self.pending.take() {
            let next = self.discretizer.index(feedback.next_state.as_array());
            self.table.update(
                state,
                action,
                feedback.utility,
                next,
                self.config.learning_rate,
                self.config.discount,
            );
        }
        Ok(())
    }

    fn set_training(&mut self, on: bool) {
        self.training = on;
    }

    fn save(&self, path: &Path) -> Result<()> {
        let checkpoint = QTableCheckpoint {
            kind: "qtable".into(),
            config: self.config,
            levels: self.codec.levels().to_vec(),
            components: self.codec.components(),
            discretizer: self.discretizer,
            table: self.table.clone(),
        };
        let text = serde_json::to_string_pretty(&checkpoint)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct QTableCheckpoint {
    kind: String,
    config: QTableConfig,
    levels: Vec<f64>,
    components: usize,
    discretizer: Discretizer,
    table: QTable,
}

fn discretizer_from_context(ctx: &AgentContext) -> Discretizer {
    Discretizer {
        highs: [ctx.norm.demand, ctx.norm.generation, ctx.norm.battery],
        bins: ctx.qtable.bins,
    }
}

pub fn build(ctx: &AgentContext) -> Result<Box<dyn Agent>> {
    let codec = ctx.codec()?;
    Ok(Box::new(QTableAgent::new(
        ctx.qtable,
        codec,
        discretizer_from_context(ctx),
    )?))
}

pub fn load(path: &Path, _ctx: &AgentContext) -> Result<Box<dyn Agent>> {
    let text = std::fs::read_to_string(path)?;
    let checkpoint: QTableCheckpoint =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let codec = ActionCodec::new(checkpoint.levels.clone(), checkpoint.components)?;
    let mut agent = QTableAgent::new(checkpoint.config, codec, checkpoint.discretizer)?;
    if checkpoint.table.values.len() != agent.table.values.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} table cells", agent.table.values.len()),
            found: format!("{}", checkpoint.table.values.len()),
        });
    }
    agent.table = checkpoint.table;
    Ok(Box::new(agent))
}
