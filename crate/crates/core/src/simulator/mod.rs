//! Drives a key stream through `S` sources and one routing strategy.
//!
//! A run is strictly sequential: message `t` is dispatched to a source,
//! routed, and the true global loads are updated before message `t + 1` is
//! looked at. All routing state is integral, so runs are bit-for-bit
//! reproducible from their seeds.

mod disagreement;
mod sweep;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use disagreement::{measure_disagreement, measure_disagreement_on, Disagreement, BALANCE_EPSILON};
pub use sweep::{aggregate, single_point, sweep, AggregateRow, SweepGrid, SweepRow};

use crate::config::{Dispatch, KeyTracking, SimConfig, Strategy, TieBreak};
use crate::error::{Error, Result};
use crate::hashing::{derive_seed, keyed_hash, HashFamily};
use crate::metrics::fraction_avg_imbalance;
use crate::partitioners::{
    off_greedy_assign, EstimateMode, KeyGrouping, OffGreedy, OnGreedy, Partitioner, Pkg,
    ShuffleGrouping, StaticPotc,
};
use crate::types::{KeyId, LoadVector, WorkerId};
use crate::workloads::{Stream, WorkloadSpec};

// Sub-stream indices for seeds derived from `SimConfig::seed`.
const HASH_STREAM: u64 = 0;
const DISPATCH_STREAM: u64 = 1;
const SOURCE_HASH_STREAM: u64 = 2;
const TIE_STREAM_BASE: u64 = 1 << 16;

/// Hash family used by every source of a run with this configuration.
pub fn family_for(config: &SimConfig) -> Result<HashFamily> {
    HashFamily::new(config.choices, config.workers, derive_seed(config.seed, HASH_STREAM))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: u64,
    pub imbalance: f64,
    pub max_load: u64,
    pub avg_load: f64,
    /// Sum over sources of the imbalance of the load each source generated.
    pub local_imbalance_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub t: u64,
    pub key: KeyId,
    pub worker: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub messages: u64,
    pub final_loads: LoadVector,
    /// Samples at every multiple of the sample interval.
    pub samples: Vec<Sample>,
    /// State after the last message, whether or not it fell on the stride.
    pub final_sample: Sample,
    pub fraction_avg_imbalance: f64,
    /// Workers that received each key (`KeyTracking::Full`).
    #[serde(skip)]
    pub key_worker_sets: Option<HashMap<KeyId, Vec<WorkerId>>>,
    /// Largest number of distinct workers any key was sent to.
    pub max_key_workers: Option<usize>,
    #[serde(skip)]
    pub decisions: Option<Vec<Decision>>,
    /// Loads generated by each source.
    pub source_loads: Vec<LoadVector>,
    /// Whether the per-source estimates summed to the global loads at every
    /// sample (no-probe local estimation only).
    pub estimates_consistent: Option<bool>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SimResult {
    pub fn imbalance_series(&self) -> Vec<(u64, f64)> {
        self.samples.iter().map(|s| (s.t, s.imbalance)).collect()
    }

    pub fn final_imbalance(&self) -> f64 {
        self.final_sample.imbalance
    }
}

/// Incremental simulation over a stream that may be produced lazily.
pub struct Simulation {
    config: SimConfig,
    interval: u64,
    dispatch: Dispatch,
    partitioners: Vec<Box<dyn Partitioner>>,
    global: LoadVector,
    sent: Vec<LoadVector>,
    sent_counts: Vec<u64>,
    t: u64,
    samples: Vec<Sample>,
    dispatch_rng: ChaCha8Rng,
    source_hash_seed: u64,
    key_sets: Option<HashMap<KeyId, Vec<WorkerId>>>,
    decisions: Option<Vec<Decision>>,
    check_estimates: bool,
    estimates_consistent: bool,
    started: Instant,
}

impl Simulation {
    /// `expected` is the stream length, used for the default sample stride.
    /// `census` is required by `off-greedy`.
    pub fn new(
        config: &SimConfig,
        expected: u64,
        census: Option<&HashMap<KeyId, u64>>,
        has_source_keys: bool,
    ) -> Result<Self> {
        config.validate()?;
        let family = family_for(config)?;
        let partitioners = build_partitioners(config, &family, census)?;
        let dispatch = config.dispatch.unwrap_or(if has_source_keys {
            Dispatch::KeyGrouped
        } else {
            Dispatch::RoundRobin
        });
        if dispatch == Dispatch::KeyGrouped && !has_source_keys {
            return Err(Error::config("key-grouped dispatch needs a stream with source keys"));
        }
        let check_estimates = config.strategy == Strategy::PkgLocal;
        Ok(Simulation {
            config: config.clone(),
            interval: config.sample_interval_for(expected),
            dispatch,
            partitioners,
            global: LoadVector::zeros(config.workers),
            sent: vec![LoadVector::zeros(config.workers); config.sources],
            sent_counts: vec![0; config.sources],
            t: 0,
            samples: Vec::new(),
            dispatch_rng: ChaCha8Rng::seed_from_u64(derive_seed(config.seed, DISPATCH_STREAM)),
            source_hash_seed: derive_seed(config.seed, SOURCE_HASH_STREAM),
            key_sets: (config.key_tracking != KeyTracking::Off).then(HashMap::new),
            decisions: config
                .log_decisions
                .then(|| Vec::with_capacity(expected.min(1 << 24) as usize)),
            check_estimates,
            estimates_consistent: true,
            started: Instant::now(),
        })
    }

    pub fn global_loads(&self) -> &LoadVector {
        &self.global
    }

    pub fn source_loads(&self) -> &[LoadVector] {
        &self.sent
    }

    /// Local estimates of every source, for strategies that keep them.
    pub fn estimates(&self) -> Vec<&LoadVector> {
        self.partitioners
            .iter()
            .filter_map(|p| p.local_estimate())
            .collect()
    }

    fn source_for(&mut self, source_key: Option<KeyId>) -> usize {
        let s = self.config.sources;
        match self.dispatch {
            Dispatch::RoundRobin => (self.t % s as u64) as usize,
            Dispatch::Shuffle => self.dispatch_rng.random_range(0..s),
            Dispatch::KeyGrouped => {
                let k = source_key.expect("key-grouped dispatch without a source key");
                (keyed_hash(k, self.source_hash_seed) % s as u64) as usize
            }
        }
    }

    /// Routes one message and returns the chosen worker.
    pub fn push(&mut self, key: KeyId, source_key: Option<KeyId>) -> WorkerId {
        let source = self.source_for(source_key);
        let slot = if self.config.strategy.is_coordinated() { 0 } else { source };
        if let Some(period) = self.config.probe_period {
            let c = self.sent_counts[source];
            let offset = self.config.probe_phase.offset(source, self.config.sources, period);
            if c > 0 && c % period == offset {
                self.partitioners[slot].probe(&self.global);
            }
        }
        let worker = self.partitioners[slot].route(key, &self.global);
        debug_assert!(worker < self.config.workers);
        self.global.increment(worker);
        self.sent[source].increment(worker);
        self.sent_counts[source] += 1;
        self.t += 1;

        if let Some(sets) = &mut self.key_sets {
            let set = sets.entry(key).or_default();
            if !set.contains(&worker) {
                set.push(worker);
            }
        }
        if let Some(log) = &mut self.decisions {
            log.push(Decision {
                t: self.t,
                key,
                worker: worker as u32,
            });
        }
        if self.t.is_multiple_of(self.interval) {
            let s = self.sample();
            self.samples.push(s);
            if self.check_estimates {
                self.estimates_consistent &= self.estimates_sum_to_global();
            }
        }
        worker
    }

    fn estimates_sum_to_global(&self) -> bool {
        let mut sum = vec![0u64; self.config.workers];
        for est in self.estimates() {
            for (acc, &l) in sum.iter_mut().zip(est.as_slice()) {
                *acc += l;
            }
        }
        sum == self.global.as_slice()
    }

    fn sample(&self) -> Sample {
        let local_imbalance_sum = self
            .sent
            .iter()
            .map(|l| l.imbalance().expect("workers >= 1"))
            .sum();
        Sample {
            t: self.t,
            imbalance: self.global.imbalance().expect("workers >= 1"),
            max_load: self.global.max(),
            avg_load: self.global.mean(),
            local_imbalance_sum,
        }
    }

    pub fn finish(mut self) -> Result<SimResult> {
        if self.t == 0 {
            return Err(Error::invalid("cannot summarize an empty stream"));
        }
        let final_sample = self.sample();
        let series: Vec<(u64, f64)> = if self.samples.is_empty() {
            vec![(final_sample.t, final_sample.imbalance)]
        } else {
            self.samples.iter().map(|s| (s.t, s.imbalance)).collect()
        };
        let fraction = fraction_avg_imbalance(&series, self.t)?;
        let max_key_workers = self
            .key_sets
            .as_ref()
            .map(|sets| sets.values().map(Vec::len).max().unwrap_or(0));
        let key_worker_sets = match self.config.key_tracking {
            KeyTracking::Full => self.key_sets.take(),
            _ => None,
        };
        Ok(SimResult {
            config: self.config,
            messages: self.t,
            final_loads: self.global,
            samples: self.samples,
            final_sample,
            fraction_avg_imbalance: fraction,
            key_worker_sets,
            max_key_workers,
            decisions: self.decisions,
            source_loads: self.sent,
            estimates_consistent: self.check_estimates.then_some(self.estimates_consistent),
            wall_time: self.started.elapsed(),
        })
    }
}

fn build_partitioners(
    config: &SimConfig,
    family: &HashFamily,
    census: Option<&HashMap<KeyId, u64>>,
) -> Result<Vec<Box<dyn Partitioner>>> {
    let random_ties = config.tie_break == TieBreak::Random;
    let tie_seed = |slot: usize| derive_seed(config.seed, TIE_STREAM_BASE + slot as u64);
    let per_source = |make: &dyn Fn(usize) -> Box<dyn Partitioner>| -> Vec<Box<dyn Partitioner>> {
        (0..config.sources).map(make).collect()
    };
    let (w, d) = (config.workers, config.choices);
    let parts: Vec<Box<dyn Partitioner>> = match config.strategy {
        Strategy::Kg => per_source(&|_| Box::new(KeyGrouping::new(family.clone()))),
        Strategy::Sg => per_source(&|_| Box::new(ShuffleGrouping::new(w))),
        Strategy::PkgLocal | Strategy::PkgProbe => per_source(&|j| {
            let p = Pkg::new(family.clone(), d, w, EstimateMode::Local);
            Box::new(if random_ties { p.with_random_ties(tie_seed(j)) } else { p })
        }),
        Strategy::PkgGlobal => {
            let p = Pkg::new(family.clone(), d, w, EstimateMode::Global);
            vec![Box::new(if random_ties { p.with_random_ties(tie_seed(0)) } else { p })]
        }
        Strategy::PotcStatic => {
            let p = StaticPotc::new(family.clone());
            vec![Box::new(if random_ties { p.with_random_ties(tie_seed(0)) } else { p })]
        }
        Strategy::OnGreedy => vec![Box::new(OnGreedy::new())],
        Strategy::OffGreedy => {
            let census = census.ok_or_else(|| {
                Error::config("off-greedy needs a key-frequency census of the whole stream")
            })?;
            vec![Box::new(OffGreedy::new(off_greedy_assign(census, w)))]
        }
    };
    Ok(parts)
}

/// Runs `config` over an already materialized stream.
pub fn run_stream(config: &SimConfig, stream: &Stream) -> Result<SimResult> {
    let census = (config.strategy == Strategy::OffGreedy).then(|| stream.census());
    let mut sim = Simulation::new(
        config,
        stream.len() as u64,
        census.as_ref(),
        stream.source_keys.is_some(),
    )?;
    match &stream.source_keys {
        Some(src) => {
            for (&k, &s) in stream.keys.iter().zip(src) {
                sim.push(k, Some(s));
            }
        }
        None => {
            for &k in &stream.keys {
                sim.push(k, None);
            }
        }
    }
    sim.finish()
}

pub fn run(config: &SimConfig, workload: &WorkloadSpec) -> Result<SimResult> {
    run_stream(config, &workload.materialize()?)
}

/// Loads obtained by applying a decision log from scratch.
pub fn replay(decisions: &[Decision], workers: usize) -> Result<LoadVector> {
    let mut loads = LoadVector::zeros(workers);
    for d in decisions {
        let w = d.worker as usize;
        if w >= workers {
            return Err(Error::invalid(format!(
                "decision at t={} names worker {w} of {workers}",
                d.t
            )));
        }
        loads.increment(w);
    }
    Ok(loads)
}

/// Replays a decision log and checks that every decision was the least
/// loaded of the key's first `d` choices at that instant (lowest index on
/// ties). Returns the timestamp of the first violation.
pub fn check_greedy_decisions(
    decisions: &[Decision],
    family: &HashFamily,
    d: usize,
    workers: usize,
) -> std::result::Result<(), u64> {
    let mut loads = LoadVector::zeros(workers);
    let mut choices = Vec::with_capacity(d);
    for dec in decisions {
        family.choices_into(dec.key, d, &mut choices);
        if loads.argmin_of(&choices) != dec.worker as usize {
            return Err(dec.t);
        }
        loads.increment(dec.worker as usize);
    }
    Ok(())
}
