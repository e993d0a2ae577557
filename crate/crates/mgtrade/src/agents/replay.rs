//! Fixed-capacity FIFO replay memory.

use std::collections::VecDeque;

use rand::Rng;

use crate::neural::Tensor;

/// One stored transition: encoded sequence, the action taken on it, the
/// realized utility, and the sequence one slot later.
#[derive(Debug, Clone)]
pub struct ExperienceRecord {
    pub sequence: Tensor,
    pub action: usize,
    pub utility: f64,
    pub next_sequence: Tensor,
}

#[derive(Debug)]
pub struct ReplayPool {
    capacity: usize,
    records: VecDeque<ExperienceRecord>,
    pushed_total: u64,
}

impl ReplayPool {
    pub fn new(capacity: usize) -> Self {
        ReplayPool {
            capacity,
            records: VecDeque::with_capacity(capacity),
            pushed_total: 0,
        }
    }

    pub fn push(&mut self, record: ExperienceRecord) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
        self.pushed_total += 1;
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn pushed_total(&self) -> u64 {
        self.pushed_total
    }

    /// Uniform sample of `m` distinct records (partial Fisher-Yates).
    pub fn sample(&self, m: usize, rng: &mut impl Rng) -> Vec<&ExperienceRecord> {
        assert!(
            m <= self.records.len(),
            "cannot sample {m} of {}",
            self.records.len()
        );
        let mut indices: Vec<usize> = (0..self.records.len()).collect();
        for k in 0..m {
            let j = rng.gen_range(k..indices.len());
            indices.swap(k, j);
        }
        indices[..m].iter().map(|&i| &self.records[i]).collect()
    }
}
