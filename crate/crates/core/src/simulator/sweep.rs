use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run_stream;
use crate::config::{SimConfig, Strategy};
use crate::error::Result;
use crate::workloads::WorkloadSpec;

/// Cartesian grid of runs. Every seed is used both for the hash family and
/// for the workload generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub workloads: Vec<WorkloadSpec>,
    pub strategies: Vec<Strategy>,
    pub sources: Vec<usize>,
    pub workers: Vec<usize>,
    pub choices: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub probe_period: Option<u64>,
    #[serde(default)]
    pub sample_interval: Option<u64>,
}

impl SweepGrid {
    pub fn points(&self) -> usize {
        self.workloads.len()
            * self.strategies.len()
            * self.sources.len()
            * self.workers.len()
            * self.choices.len()
            * self.seeds.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub workload: String,
    pub strategy: Strategy,
    pub sources: usize,
    pub workers: usize,
    pub choices: usize,
    pub seed: u64,
    pub messages: Option<u64>,
    pub p1: Option<f64>,
    pub fraction_avg_imbalance: Option<f64>,
    pub final_imbalance: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Runs every grid point. Rows come back in grid order (workload, seed,
/// strategy, sources, workers, choices) regardless of `parallel`; failing
/// points become rows with `error` set.
pub fn sweep(grid: &SweepGrid, parallel: bool) -> Vec<SweepRow> {
    let groups: Vec<(&WorkloadSpec, u64)> = grid
        .workloads
        .iter()
        .flat_map(|w| grid.seeds.iter().map(move |&s| (w, s)))
        .collect();
    let run_group = |&(workload, seed): &(&WorkloadSpec, u64)| run_group(grid, workload, seed);
    let nested: Vec<Vec<SweepRow>> = if parallel {
        groups.par_iter().map(run_group).collect()
    } else {
        groups.iter().map(run_group).collect()
    };
    nested.into_iter().flatten().collect()
}

fn run_group(grid: &SweepGrid, workload: &WorkloadSpec, seed: u64) -> Vec<SweepRow> {
    let workload = workload.with_seed(seed);
    let label = workload.label();
    let p1 = workload
        .distribution()
        .ok()
        .flatten()
        .map(|d| d.p1());
    let stream = workload.materialize();
    let mut rows = Vec::new();
    for &strategy in &grid.strategies {
        for &sources in &grid.sources {
            for &workers in &grid.workers {
                for &choices in &grid.choices {
                    let mut row = SweepRow {
                        workload: label.clone(),
                        strategy,
                        sources,
                        workers,
                        choices,
                        seed,
                        messages: None,
                        p1,
                        fraction_avg_imbalance: None,
                        final_imbalance: None,
                        error: None,
                    };
                    let outcome = stream.as_ref().map_err(|e| e.to_string()).and_then(|s| {
                        let mut cfg = SimConfig::new(strategy, sources, workers, choices, seed);
                        cfg.probe_period = (strategy == Strategy::PkgProbe)
                            .then_some(grid.probe_period)
                            .flatten();
                        cfg.sample_interval = grid.sample_interval;
                        run_stream(&cfg, s).map_err(|e| e.to_string())
                    });
                    match outcome {
                        Ok(r) => {
                            row.messages = Some(r.messages);
                            row.fraction_avg_imbalance = Some(r.fraction_avg_imbalance);
                            row.final_imbalance = Some(r.final_imbalance());
                        }
                        Err(e) => row.error = Some(e),
                    }
                    rows.push(row);
                }
            }
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub workload: String,
    pub strategy: Strategy,
    pub sources: usize,
    pub workers: usize,
    pub choices: usize,
    pub trials: usize,
    pub failed: usize,
    pub median: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

/// Median, min and max of `fraction_avg_imbalance` over seeds, per grid
/// point. Output is sorted by grid point, so input order does not matter.
pub fn aggregate(rows: &[SweepRow]) -> Vec<AggregateRow> {
    use std::collections::BTreeMap;
    type Key = (String, &'static str, usize, usize, usize);
    let mut groups: BTreeMap<Key, (Strategy, Vec<f64>, usize)> = BTreeMap::new();
    for r in rows {
        let key = (r.workload.clone(), r.strategy.as_str(), r.sources, r.workers, r.choices);
        let entry = groups.entry(key).or_insert((r.strategy, Vec::new(), 0));
        match r.fraction_avg_imbalance {
            Some(v) if r.is_ok() => entry.1.push(v),
            _ => entry.2 += 1,
        }
    }
    groups
        .into_iter()
        .map(|((workload, _, sources, workers, choices), (strategy, mut vals, failed))| {
            vals.sort_by(f64::total_cmp);
            AggregateRow {
                workload,
                strategy,
                sources,
                workers,
                choices,
                trials: vals.len(),
                failed,
                median: median(&vals),
                min: vals.first().copied(),
                max: vals.last().copied(),
            }
        })
        .collect()
}

/// Median of an ascending slice.
pub(crate) fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
    }
}

/// Convenience wrapper: a one-point grid.
pub fn single_point(config: &SimConfig, workload: &WorkloadSpec) -> Result<SweepGrid> {
    config.validate()?;
    Ok(SweepGrid {
        workloads: vec![workload.clone()],
        strategies: vec![config.strategy],
        sources: vec![config.sources],
        workers: vec![config.workers],
        choices: vec![config.choices],
        seeds: vec![config.seed],
        probe_period: config.probe_period,
        sample_interval: config.sample_interval,
    })
}
