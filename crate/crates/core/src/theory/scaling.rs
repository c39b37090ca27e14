use rayon::prelude::*;
use serde::Serialize;

use crate::config::{SimConfig, Strategy};
use crate::error::{Error, Result};
use crate::hashing::derive_seed;
use crate::simulator::run;
use crate::workloads::WorkloadSpec;

/// Largest tolerated `max/min` spread of the normalized imbalance across `n`.
/// The asymptotic bounds hide their constants; this is a desk-scale calibration.
pub const SCALING_SPREAD_GATE: f64 = 2.5;

const MIN_DISTINCT_N: usize = 3;

/// Median normalized imbalance `R(n) = I(m) / (m/n)` for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub d: usize,
    pub messages: u64,
    pub ratios: Vec<f64>,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingVerdict {
    pub d: usize,
    pub ns: Vec<usize>,
    pub medians: Vec<f64>,
    /// `R(n)` for `d >= 2`, `R(n) / (ln n / ln ln n)` for `d = 1`.
    pub normalized: Vec<f64>,
    pub spread: f64,
    /// Only meaningful for `d = 1`.
    pub increasing: Option<bool>,
    pub passed: bool,
}

impl ScalingVerdict {
    pub fn label(&self) -> String {
        if self.passed {
            format!("PASS-d{}", self.d.min(2))
        } else {
            "FAIL".to_string()
        }
    }
}

fn one_run(d: usize, n: usize, seed: u64) -> Result<f64> {
    let m = (n * n) as u64;
    let workload = WorkloadSpec::Uniform { keys: 5 * n, messages: m, seed };
    // d = 1 is plain hashing; d >= 2 is greedy-d on the true loads
    let mut config = if d == 1 {
        SimConfig::new(Strategy::Kg, 1, n, 1, seed)
    } else {
        SimConfig::new(Strategy::PkgGlobal, 1, n, d, seed)
    };
    config.sample_interval = Some(m);
    let result = run(&config, &workload)?;
    Ok(result.final_imbalance() / (m as f64 / n as f64))
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

/// Greedy-d over a uniform distribution on `5n` keys with `m = n^2` messages,
/// `seeds` independent runs per `n`.
pub fn run_scaling(d: usize, ns: &[usize], seeds: usize, master: u64, parallel: bool) -> Result<Vec<ScalingPoint>> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    if seeds == 0 {
        return Err(Error::invalid("at least one seed is required"));
    }
    if let Some(&n) = ns.iter().find(|&&n| n < d) {
        return Err(Error::invalid(format!("n = {n} is smaller than d = {d}")));
    }
    let jobs: Vec<(usize, usize)> = ns
        .iter()
        .flat_map(|&n| (0..seeds).map(move |s| (n, s)))
        .collect();
    let job = |&(n, s): &(usize, usize)| one_run(d, n, derive_seed(master ^ n as u64, s as u64));
    let ratios: Vec<f64> = if parallel {
        jobs.par_iter().map(job).collect::<Result<_>>()?
    } else {
        jobs.iter().map(job).collect::<Result<_>>()?
    };
    Ok(ns
        .iter()
        .zip(ratios.chunks(seeds))
        .map(|(&n, r)| ScalingPoint {
            n,
            d,
            messages: (n * n) as u64,
            ratios: r.to_vec(),
            median: median(r),
        })
        .collect())
}

fn lnln_growth(n: usize) -> f64 {
    let ln = (n as f64).ln();
    ln / ln.ln()
}

/// Bounded `R(n)` for `d >= 2`; for `d = 1`, strictly increasing `R(n)` whose
/// ratio to `ln n / ln ln n` stays bounded. `n = 1` is always dropped, and
/// `n < 3` for `d = 1` where `ln ln n` is not positive.
pub fn fit_imbalance_scaling(points: &[ScalingPoint]) -> Result<ScalingVerdict> {
    let d = points
        .first()
        .map(|p| p.d)
        .ok_or_else(|| Error::invalid("no scaling points"))?;
    if points.iter().any(|p| p.d != d) {
        return Err(Error::invalid("scaling points mix different d"));
    }
    let min_n = if d == 1 { 3 } else { 2 };
    let mut used: Vec<&ScalingPoint> = points.iter().filter(|p| p.n >= min_n).collect();
    used.sort_by_key(|p| p.n);
    used.dedup_by_key(|p| p.n);
    if used.len() < MIN_DISTINCT_N {
        return Err(Error::invalid(format!(
            "insufficient data: {} distinct n usable, need {MIN_DISTINCT_N}",
            used.len()
        )));
    }
    let ns: Vec<usize> = used.iter().map(|p| p.n).collect();
    let medians: Vec<f64> = used.iter().map(|p| p.median).collect();
    let normalized: Vec<f64> = if d == 1 {
        used.iter().map(|p| p.median / lnln_growth(p.n)).collect()
    } else {
        medians.clone()
    };
    let max = normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = normalized.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if min > 0.0 { max / min } else { f64::INFINITY };
    let increasing = (d == 1).then(|| medians.windows(2).all(|w| w[1] > w[0]));
    let passed = spread <= SCALING_SPREAD_GATE && increasing.unwrap_or(true);
    Ok(ScalingVerdict {
        d,
        ns,
        medians,
        normalized,
        spread,
        increasing,
        passed,
    })
}
