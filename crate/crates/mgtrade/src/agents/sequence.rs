//! Experience sequences and their encoding into the network's square input.

use serde::{Deserialize, Serialize};

use crate::neural::{Tensor, INPUT_LEN, INPUT_SIDE};
use crate::{Error, Result};

/// Per-scalar normalization ranges; each scalar is divided by its range
/// before entering the network, so states land in `[0, 1]` and actions in
/// `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRanges {
    /// Peak demand.
    pub demand: f64,
    /// Rated generation per slot.
    pub generation: f64,
    /// Battery capacity.
    pub battery: f64,
    /// Trade cap.
    pub action: f64,
}

impl NormRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("demand", self.demand),
            ("generation", self.generation),
            ("battery", self.battery),
            ("action", self.action),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "normalization range {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// The current state plus the previous `window` state-action pairs, in
/// chronological order: the earliest state first, ending in the current
/// state. States are `[demand_est, generation_est, battery]` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperienceSequence {
    pub states: Vec<[f64; 3]>,
    pub actions: Vec<Vec<f64>>,
}

impl ExperienceSequence {
    pub fn new(states: Vec<[f64; 3]>, actions: Vec<Vec<f64>>) -> Result<Self> {
        if states.len() != actions.len() + 1 {
            return Err(Error::ShapeMismatch {
                expected: format!("{} states for {} actions", actions.len() + 1, actions.len()),
                found: format!("{}", states.len()),
            });
        }
        if let Some(first) = actions.first() {
            if actions.iter().any(|a| a.len() != first.len()) {
                return Err(Error::ShapeMismatch {
                    expected: format!("uniform action rows of {}", first.len()),
                    found: "mixed lengths".into(),
                });
            }
        }
        Ok(ExperienceSequence { states, actions })
    }

    pub fn window(&self) -> usize {
        self.actions.len()
    }

    pub fn action_components(&self) -> usize {
        self.actions.first().map_or(0, |a| a.len())
    }

    /// Flat scalar count before padding: `3 (W + 1) + N W`.
    pub fn scalar_count(&self) -> usize {
        3 * self.states.len() + self.action_components() * self.actions.len()
    }
}

/// Flattens a sequence chronologically (state scalars, then that step's
/// action scalars), normalizes every scalar by its range, zero-pads to the
/// network's 36 inputs, and reshapes row-major to 6x6.
pub fn encode_sequence(seq: &ExperienceSequence, ranges: &NormRanges) -> Result<Tensor> {
    ranges.validate()?;
    let count = seq.scalar_count();
    if count > INPUT_LEN {
        return Err(Error::ShapeMismatch {
            expected: format!("at most {INPUT_LEN} scalars"),
            found: format!("{count}"),
        });
    }
    let mut flat = Vec::with_capacity(INPUT_LEN);
    for (k, state) in seq.states.iter().enumerate() {
        flat.push(state[0] / ranges.demand);
        flat.push(state[1] / ranges.generation);
        flat.push(state[2] / ranges.battery);
        if k < seq.actions.len() {
            for v in &seq.actions[k] {
                flat.push(v / ranges.action);
            }
        }
    }
    flat.resize(INPUT_LEN, 0.0);
    Tensor::new(vec![INPUT_SIDE, INPUT_SIDE], flat)
}

/// Inverse of [`encode_sequence`] on the unpadded prefix; mainly for tests.
pub fn decode_sequence(
    tensor: &Tensor,
    window: usize,
    action_components: usize,
    ranges: &NormRanges,
) -> Result<ExperienceSequence> {
    let flat = tensor.data();
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[f64]> {
        if pos + n > flat.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} scalars", pos + n),
                found: format!("{}", flat.len()),
            });
        }
        let s = &flat[pos..pos + n];
        pos += n;
        Ok(s)
    };
    let mut states = Vec::with_capacity(window + 1);
    let mut actions = Vec::with_capacity(window);
    for k in 0..=window {
        let s = take(3)?;
        states.push([
            s[0] * ranges.demand,
            s[1] * ranges.generation,
            s[2] * ranges.battery,
        ]);
        if k < window {
            let a = take(action_components)?;
            actions.push(a.iter().map(|v| v * ranges.action).collect());
        }
    }
    ExperienceSequence::new(states, actions)
}
