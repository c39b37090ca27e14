use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{argmin_random, Partitioner, RoutingTable};
use crate::hashing::HashFamily;
use crate::types::{KeyId, LoadVector, WorkerId};

/// Power of choices without key splitting: the first time a key is seen it
/// is pinned to the least loaded of its hash choices `h_1(key), .., h_d(key)`.
pub fn potc_static_route(
    family: &HashFamily,
    key: KeyId,
    table: &mut RoutingTable,
    loads: &LoadVector,
) -> WorkerId {
    if let Some(w) = table.get(key) {
        return w;
    }
    let mut best = family.choice(0, key);
    for i in 1..family.d() {
        let c = family.choice(i, key);
        if loads[c] < loads[best] || (loads[c] == loads[best] && c < best) {
            best = c;
        }
    }
    table.pin(key, best)
}

/// First occurrence of a key goes to the globally least loaded worker.
pub fn on_greedy_route(key: KeyId, table: &mut RoutingTable, loads: &LoadVector) -> WorkerId {
    if let Some(w) = table.get(key) {
        return w;
    }
    table.pin(key, loads.argmin())
}

/// Offline greedy: keys by decreasing frequency (ascending key id on ties),
/// each placed on the bin with the least assigned frequency so far.
pub fn off_greedy_assign(freqs: &HashMap<KeyId, u64>, workers: usize) -> RoutingTable {
    let mut keys: Vec<(KeyId, u64)> = freqs.iter().map(|(&k, &f)| (k, f)).collect();
    keys.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut bins = LoadVector::zeros(workers);
    let mut table = RoutingTable::new();
    for (key, freq) in keys {
        let w = bins.argmin();
        table.pin(key, w);
        bins.add(w, freq);
    }
    table
}

#[derive(Debug, Clone)]
pub struct StaticPotc {
    family: HashFamily,
    table: RoutingTable,
    rng: Option<ChaCha8Rng>,
}

impl StaticPotc {
    pub fn new(family: HashFamily) -> Self {
        StaticPotc {
            family,
            table: RoutingTable::new(),
            rng: None,
        }
    }

    pub fn with_random_ties(mut self, seed: u64) -> Self {
        self.rng = Some(ChaCha8Rng::seed_from_u64(seed));
        self
    }

    pub fn table(&self) -> &RoutingTable {
        &self.table
    }
}

impl Partitioner for StaticPotc {
    fn route(&mut self, key: KeyId, global: &LoadVector) -> WorkerId {
        match &mut self.rng {
            None => potc_static_route(&self.family, key, &mut self.table, global),
            Some(rng) => {
                if let Some(w) = self.table.get(key) {
                    return w;
                }
                let fam = &self.family;
                let w = argmin_random(global, (0..fam.d()).map(|i| fam.choice(i, key)), rng);
                self.table.pin(key, w)
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OnGreedy {
    table: RoutingTable,
}

impl OnGreedy {
    pub fn new() -> Self {
        OnGreedy::default()
    }
}

impl Partitioner for OnGreedy {
    fn route(&mut self, key: KeyId, global: &LoadVector) -> WorkerId {
        on_greedy_route(key, &mut self.table, global)
    }
}

/// Replays a precomputed [`off_greedy_assign`] table. Keys missing from the
/// census fall back to online greedy placement.
#[derive(Debug, Clone)]
pub struct OffGreedy {
    table: RoutingTable,
}

impl OffGreedy {
    pub fn new(table: RoutingTable) -> Self {
        OffGreedy { table }
    }
}

impl Partitioner for OffGreedy {
    fn route(&mut self, key: KeyId, global: &LoadVector) -> WorkerId {
        on_greedy_route(key, &mut self.table, global)
    }
}
