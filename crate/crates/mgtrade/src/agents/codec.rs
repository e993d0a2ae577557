//! Bijective mapping between flat action indices and per-counterpart trade
//! rows.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Quantized action space: each of `components` row entries takes one of the
/// `levels`, so the flat index space has `levels.len() ^ components` actions.
///
/// Component `k` of the row is digit `k` (least significant first) of the
/// index in base `levels.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionCodec {
    levels: Vec<f64>,
    components: usize,
}

impl ActionCodec {
    pub fn new(levels: Vec<f64>, components: usize) -> Result<Self> {
        if levels.len() < 2 || components == 0 {
            return Err(Error::InvalidParameter(
                "codec needs at least two levels and one component".into(),
            ));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "levels must be strictly increasing".into(),
            ));
        }
        if !levels.contains(&0.0) {
            return Err(Error::InvalidParameter("levels must include 0".into()));
        }
        for &l in &levels {
            if !levels.iter().any(|&m| (m + l).abs() < 1e-9) {
                return Err(Error::InvalidParameter(format!(
                    "levels must be symmetric about 0; {l} has no mirror"
                )));
            }
        }
        let mut count: usize = 1;
        for _ in 0..components {
            count = count
                .checked_mul(levels.len())
                .ok_or_else(|| Error::InvalidParameter("action space overflows".into()))?;
        }
        if count > 1_000_000 {
            return Err(Error::InvalidParameter(format!(
                "action space of {count} is too large"
            )));
        }
        Ok(ActionCodec { levels, components })
    }

    /// Default five symmetric levels spanning the trade cap.
    pub fn default_levels(cap: f64) -> Vec<f64> {
        vec![-cap, -cap / 2.0, 0.0, cap / 2.0, cap]
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn action_count(&self) -> usize {
        self.levels.len().pow(self.components as u32)
    }

    /// Largest level magnitude; every decoded component stays within it.
    pub fn max_magnitude(&self) -> f64 {
        self.levels.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn decode(&self, index: usize) -> Vec<f64> {
        assert!(
            index < self.action_count(),
            "action index {index} out of range"
        );
        let base = self.levels.len();
        let mut rest = index;
        (0..self.components)
            .map(|_| {
                let digit = rest % base;
                rest /= base;
                self.levels[digit]
            })
            .collect()
    }

    pub fn encode(&self, row: &[f64]) -> Result<usize> {
        if row.len() != self.components {
            return Err(Error::ShapeMismatch {
                expected: format!("{} components", self.components),
                found: format!("{}", row.len()),
            });
        }
        let base = self.levels.len();
        let mut index = 0usize;
        for (k, &v) in row.iter().enumerate() {
            let digit = self
                .levels
                .iter()
                .position(|&l| (l - v).abs() < 1e-9)
                .ok_or_else(|| Error::Domain(format!("{v} is not a codec level")))?;
            index += digit * base.pow(k as u32);
        }
        Ok(index)
    }
}
