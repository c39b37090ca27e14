use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type KeyId = u64;
pub type WorkerId = usize;

/// One keyed unit of work. `t` is the 1-based message index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub t: u64,
    pub key: KeyId,
    pub value: Vec<u8>,
}

impl Message {
    pub fn new(t: u64, key: KeyId) -> Self {
        Message {
            t,
            key,
            value: Vec::new(),
        }
    }
}

/// Per-worker message counters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LoadVector(Vec<u64>);

impl LoadVector {
    pub fn zeros(workers: usize) -> Self {
        LoadVector(vec![0; workers])
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        LoadVector(counts)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }

    #[inline]
    pub fn increment(&mut self, worker: WorkerId) {
        self.0[worker] += 1;
    }

    #[inline]
    pub fn add(&mut self, worker: WorkerId, amount: u64) {
        self.0[worker] += amount;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn max(&self) -> u64 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.total() as f64 / self.0.len() as f64
    }

    /// Overwrites every counter with `other`'s.
    pub fn copy_from(&mut self, other: &LoadVector) {
        self.0.clear();
        self.0.extend_from_slice(&other.0);
    }

    /// `max - mean`, computed exactly over the counters and then converted.
    pub fn imbalance(&self) -> Result<f64> {
        self.imbalance_in::<f64>()
    }

    pub fn imbalance_in<T: Scalar>(&self) -> Result<T> {
        if self.0.is_empty() {
            return Err(Error::invalid("imbalance of an empty load vector"));
        }
        // max - total/W == (W*max - total) / W keeps the subtraction in integers.
        let w = self.0.len() as u64;
        let numer = w * self.max() - self.total();
        Ok(T::from_count(numer) / T::from_count(w))
    }

    /// Index of the least loaded worker among `candidates`, lowest index on ties.
    #[inline]
    pub fn argmin_of(&self, candidates: &[WorkerId]) -> WorkerId {
        let mut best = candidates[0];
        for &c in &candidates[1..] {
            let (lc, lb) = (self.0[c], self.0[best]);
            if lc < lb || (lc == lb && c < best) {
                best = c;
            }
        }
        best
    }

    /// Index of the least loaded worker overall, lowest index on ties.
    pub fn argmin(&self) -> WorkerId {
        let mut best = 0;
        for (i, &l) in self.0.iter().enumerate() {
            if l < self.0[best] {
                best = i;
            }
        }
        best
    }
}

impl Index<WorkerId> for LoadVector {
    type Output = u64;

    fn index(&self, i: WorkerId) -> &u64 {
        &self.0[i]
    }
}

impl From<Vec<u64>> for LoadVector {
    fn from(v: Vec<u64>) -> Self {
        LoadVector(v)
    }
}
