//! Uniform-random baseline policy.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::codec::ActionCodec;
use super::{Agent, AgentContext, Feedback, Observation};
use crate::{Error, Result};

pub struct RandomAgent {
    codec: ActionCodec,
}

impl RandomAgent {
    pub fn new(codec: ActionCodec) -> Self {
        RandomAgent { codec }
    }
}

impl Agent for RandomAgent {
    fn kind(&self) -> &'static str {
        "random"
    }

    fn act(&mut self, _obs: &Observation, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let index = rng.gen_range(0..self.codec.action_count());
        self.codec.decode(index)
    }

    fn learn(&mut self, _feedback: &Feedback, _rng: &mut ChaCha8Rng) -> Result<()> {
        Ok(())
    }

    fn set_training(&mut self, _on: bool) {}

    fn save(&self, path: &Path) -> Result<()> {
        let checkpoint = RandomCheckpoint {
            kind: "random".into(),
            levels: self.codec.levels().to_vec(),
            components: self.codec.components(),
        };
        let text = serde_json::to_string_pretty(&checkpoint)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RandomCheckpoint {
    kind: String,
    levels: Vec<f64>,
    components: usize,
}

pub fn build(ctx: &AgentContext) -> Result<Box<dyn Agent>> {
    Ok(Box::new(RandomAgent::new(ctx.codec()?)))
}

pub fn load(path: &Path, _ctx: &AgentContext) -> Result<Box<dyn Agent>> {
    let text = std::fs::read_to_string(path)?;
    let checkpoint: RandomCheckpoint =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let codec = ActionCodec::new(checkpoint.levels, checkpoint.components)?;
    Ok(Box::new(RandomAgent::new(codec)))
}
