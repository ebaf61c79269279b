//! Aging evolution: a bounded FIFO population, tournament sampling and
//! single-position mutation.

use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{ArchConfig, ArchSpace, HpConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

/// One completed evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub job_id: u64,
    pub arch: ArchConfig,
    pub hp: HpConfig,
    /// Validation accuracy in `[0, 1]`; `0` for failed evaluations.
    pub objective: f64,
    pub status: Status,
    /// Seconds since the start of the run.
    pub submit_time: f64,
    pub finish_time: f64,
    pub train_time: f64,
    pub worker_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl EvaluationRecord {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    /// Forces the record invariants: objective clamped into `[0, 1]`, failed
    /// records carry `0`, finish never precedes submit.
    pub fn normalized(mut self) -> Self {
        if self.status == Status::Failed || !self.objective.is_finite() {
            self.status = Status::Failed;
            self.objective = 0.0;
        }
        self.objective = self.objective.clamp(0.0, 1.0);
        if self.finish_time < self.submit_time {
            self.finish_time = self.submit_time;
        }
        self
    }
}

/// Bounded queue of the most recent evaluations; pushing past capacity evicts
/// the oldest entry.
#[derive(Debug, Clone)]
pub struct Population {
    capacity: usize,
    entries: VecDeque<EvaluationRecord>,
}

impl Population {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "population capacity must be positive");
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    /// Appends `rec`, returning the evicted oldest entry if the queue was full.
    pub fn push(&mut self, rec: EvaluationRecord) -> Option<EvaluationRecord> {
        let evicted = if self.entries.len() == self.capacity {
            self.entries.pop_front()
        } else {
            None
        };
        self.entries.push_back(rec);
        evicted
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &EvaluationRecord> {
        self.entries.iter()
    }

    /// Draws `size` distinct members uniformly at random.
    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<Vec<&EvaluationRecord>> {
        if size == 0 || size > self.entries.len() {
            return Err(Error::InsufficientPopulation {
                available: self.entries.len(),
                requested: size,
            });
        }
        Ok(index::sample(rng, self.entries.len(), size)
            .into_iter()
            .map(|i| &self.entries[i])
            .collect())
    }
}

/// Best record of a tournament sample; ties go to the earliest position.
pub fn select_parent<'a>(sample: &[&'a EvaluationRecord]) -> Result<&'a EvaluationRecord> {
    let mut best: Option<&EvaluationRecord> = None;
    for &rec in sample {
        match best {
            Some(b) if rec.objective <= b.objective => {}
            _ => best = Some(rec),
        }
    }
    best.ok_or(Error::EmptyInput("tournament sample"))
}

/// Copies `arch` and changes exactly one decision to a different value of
/// the same domain. Positions are picked uniformly over all decisions.
pub fn mutate<R: Rng + ?Sized>(arch: &ArchConfig, space: &ArchSpace, rng: &mut R) -> ArchConfig {
    let layout = space.layout();
    debug_assert_eq!(layout.len(), arch.len());
    let pos = rng.gen_range(0..arch.len());
    let arity = layout[pos].arity();
    let current = arch.decisions[pos];
    // draw from arity - 1 values and skip over the current one
    let mut value = rng.gen_range(0..arity - 1);
    if value >= current {
        value += 1;
    }
    let mut child = arch.clone();
    child.decisions[pos] = value;
    child
}
