//! Routing strategies.
//!
//! Each strategy is available both as a free function over explicit state
//! (useful for testing a single decision) and as a [`Partitioner`] that owns
//! that state for a simulation run.

mod greedy;
mod pkg;

use std::collections::HashMap;

use rand::Rng;

pub use greedy::{off_greedy_assign, on_greedy_route, potc_static_route, OffGreedy, OnGreedy, StaticPotc};
pub use pkg::{pkg_route, probe_sync, EstimateMode, Pkg};

use crate::hashing::HashFamily;
use crate::types::{KeyId, LoadVector, WorkerId};

/// Routes one message at a time on behalf of one source (or, for
/// coordinated strategies, on behalf of all of them).
pub trait Partitioner: Send {
    /// Picks a worker for `key`. `global` is the true load vector; only
    /// oracle strategies may consult it.
    fn route(&mut self, key: KeyId, global: &LoadVector) -> WorkerId;

    /// Overwrites any load estimate with the true loads.
    fn probe(&mut self, _global: &LoadVector) {}

    /// The per-source load estimate, for strategies that keep one.
    fn local_estimate(&self) -> Option<&LoadVector> {
        None
    }
}

/// Sticky key to worker assignments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoutingTable(HashMap<KeyId, WorkerId>);

impl RoutingTable {
    pub fn new() -> Self {
        RoutingTable::default()
    }

    pub fn get(&self, key: KeyId) -> Option<WorkerId> {
        self.0.get(&key).copied()
    }

    /// Stores `key -> worker` unless the key is already pinned; returns the
    /// worker the key is pinned to afterwards.
    pub fn pin(&mut self, key: KeyId, worker: WorkerId) -> WorkerId {
        *self.0.entry(key).or_insert(worker)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (KeyId, WorkerId)> + '_ {
        self.0.iter().map(|(&k, &w)| (k, w))
    }
}

/// Key grouping: `h_1(key) mod W`.
#[inline]
pub fn kg_route(family: &HashFamily, key: KeyId) -> WorkerId {
    family.choice(0, key)
}

/// Shuffle grouping: `counter mod W`, then advance the counter.
#[inline]
pub fn sg_route(counter: &mut u64, workers: usize) -> WorkerId {
    let w = (*counter % workers as u64) as WorkerId;
    *counter += 1;
    w
}

#[derive(Debug, Clone)]
pub struct KeyGrouping {
    family: HashFamily,
}

impl KeyGrouping {
    pub fn new(family: HashFamily) -> Self {
        KeyGrouping { family }
    }
}

impl Partitioner for KeyGrouping {
    fn route(&mut self, key: KeyId, _global: &LoadVector) -> WorkerId {
        kg_route(&self.family, key)
    }
}

#[derive(Debug, Clone)]
pub struct ShuffleGrouping {
    workers: usize,
    counter: u64,
}

impl ShuffleGrouping {
    pub fn new(workers: usize) -> Self {
        ShuffleGrouping { workers, counter: 0 }
    }
}

impl Partitioner for ShuffleGrouping {
    fn route(&mut self, _key: KeyId, _global: &LoadVector) -> WorkerId {
        sg_route(&mut self.counter, self.workers)
    }
}

/// Least loaded candidate, with ties broken uniformly among the tied
/// distinct workers.
pub(crate) fn argmin_random<R: Rng>(
    loads: &LoadVector,
    candidates: impl Iterator<Item = WorkerId>,
    rng: &mut R,
) -> WorkerId {
    let mut best: Vec<WorkerId> = Vec::new();
    let mut best_load = u64::MAX;
    for c in candidates {
        let l = loads[c];
        if l < best_load {
            best_load = l;
            best.clear();
            best.push(c);
        } else if l == best_load && !best.contains(&c) {
            best.push(c);
        }
    }
    best.sort_unstable();
    best[rng.random_range(0..best.len())]
}
