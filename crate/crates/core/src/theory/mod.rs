//! Empirical checks of the balls-and-bins analysis of the greedy-d process
//! with hashed key choices.
//!
//! For a worker subset `B`, `mu_r(B)` is the probability mass of keys whose
//! first `r` hash choices all fall inside `B`. Small subsets must not carry
//! more than their fair share `|B| / n` of all-choices-inside mass; that is
//! what keeps greedy-d balanced when the top key is light enough.

mod expander;
mod mu;
mod scaling;

use serde::Serialize;

pub use expander::{
    check_expander_equivalence, expansion_property, min_form_expansion_property, random_instance,
    subset_ratio_property,
    EquivalenceReport, Instance,
};
pub use mu::{overloaded_bins, verify_mu1, verify_mu_d_subsets, SubsetMode, EXHAUSTIVE_MAX_N};
pub use scaling::{fit_imbalance_scaling, run_scaling, ScalingPoint, ScalingVerdict, SCALING_SPREAD_GATE};

use crate::dist::KeyDistribution;
use crate::error::{Error, Result};
use crate::hashing::HashFamily;
use crate::scalar::Scalar;
use crate::types::WorkerId;

/// Mass of keys whose first `r` choices all lie in `subset`.
pub fn mu_r<T: Scalar>(
    subset: &[WorkerId],
    dist: &KeyDistribution<T>,
    family: &HashFamily,
    r: usize,
) -> Result<T> {
    if subset.is_empty() {
        return Err(Error::invalid("mu_r needs a non-empty worker subset"));
    }
    if r == 0 || r > family.d() {
        return Err(Error::invalid(format!("r must lie in 1..={}", family.d())));
    }
    let mut inside = vec![false; family.n()];
    for &w in subset {
        *inside
            .get_mut(w)
            .ok_or_else(|| Error::invalid(format!("worker {w} outside [0, {})", family.n())))? = true;
    }
    let mut total = T::zero();
    for (key, p) in dist.probs().iter().enumerate() {
        if (0..r).all(|i| inside[family.choice(i, key as u64)]) {
            total = total + p.clone();
        }
    }
    Ok(total)
}

/// Outcome of a verification check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The claim's hypothesis does not hold for these parameters.
    Skipped,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// `Fail` dominates, then `Pass`; all-skipped stays `Skipped`.
    pub fn combine(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Pass, _) | (_, Verdict::Pass) => Verdict::Pass,
            _ => Verdict::Skipped,
        }
    }
}

/// Monte Carlo evidence for one measure check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureReport {
    pub check: &'static str,
    pub n: usize,
    pub d: usize,
    pub keys: usize,
    pub p1: f64,
    pub trials: usize,
    /// Size of the subset whose mean measure is estimated.
    pub subset_size: usize,
    pub empirical_mean: f64,
    pub expected_mean: f64,
    pub std_error: f64,
    pub mean_verdict: Verdict,
    /// Tail checks (`mu1`): threshold, bound, observed exceedance rate.
    pub tail_threshold: Option<f64>,
    pub tail_bound: Option<f64>,
    pub tail_rate: Option<f64>,
    pub tail_verdict: Verdict,
    /// Subset-ratio checks (`mu-d-subsets`).
    pub max_subset_ratio: Option<f64>,
    pub violation_rate: Option<f64>,
    pub ratio_verdict: Verdict,
    /// Largest `|{j : mu_1({j}) >= 3e/n}|` seen over the trials.
    pub max_overloaded_bins: Option<usize>,
    pub overloaded_verdict: Verdict,
    pub verdict: Verdict,
}

impl MeasureReport {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    /// `(field, value)` pairs for tabular output.
    pub fn rows(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x}"));
        let verdict = |v: Verdict| format!("{v:?}").to_lowercase();
        vec![
            ("check", self.check.to_string()),
            ("n", self.n.to_string()),
            ("d", self.d.to_string()),
            ("keys", self.keys.to_string()),
            ("p1", format!("{}", self.p1)),
            ("trials", self.trials.to_string()),
            ("subset_size", self.subset_size.to_string()),
            ("empirical_mean", format!("{}", self.empirical_mean)),
            ("expected_mean", format!("{}", self.expected_mean)),
            ("std_error", format!("{}", self.std_error)),
            ("mean_verdict", verdict(self.mean_verdict)),
            ("tail_threshold", opt(self.tail_threshold)),
            ("tail_bound", opt(self.tail_bound)),
            ("tail_rate", opt(self.tail_rate)),
            ("tail_verdict", verdict(self.tail_verdict)),
            ("max_subset_ratio", opt(self.max_subset_ratio)),
            ("violation_rate", opt(self.violation_rate)),
            ("ratio_verdict", verdict(self.ratio_verdict)),
            (
                "max_overloaded_bins",
                self.max_overloaded_bins.map_or_else(String::new, |v| v.to_string()),
            ),
            ("overloaded_verdict", verdict(self.overloaded_verdict)),
            ("verdict", verdict(self.verdict)),
        ]
    }
}

impl std::fmt::Display for MeasureReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in self.rows() {
            if !v.is_empty() {
                writeln!(f, "{k:>20}: {v}")?;
            }
        }
        Ok(())
    }
}

/// Sample mean and standard error of the mean.
pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `|mean - expected| <= 3 SE`, or agreement to `1e-12` when SE is zero.
pub(crate) fn within_three_se(mean: f64, expected: f64, se: f64) -> bool {
    (mean - expected).abs() <= (3.0 * se).max(1e-12)
}
