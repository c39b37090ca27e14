use std::collections::BTreeMap;
use std::f64::consts::E;

use rayon::prelude::*;

use super::{mean_and_se, mu_r, within_three_se, MeasureReport, Verdict};
use crate::dist::KeyDistribution;
use crate::error::{Error, Result};
use crate::hashing::{derive_seed, HashFamily};
use crate::scalar::Scalar;
use crate::types::WorkerId;

/// Largest `n` for which every small subset is enumerated.
pub const EXHAUSTIVE_MAX_N: usize = 22;

/// Tail exceedances may be at most this multiple of the bound.
const TAIL_SLACK: f64 = 2.0;

/// Highest tolerated fraction of trials whose max subset ratio exceeds 1.
const VIOLATION_GATE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetMode {
    Exhaustive,
    /// This many uniformly random subsets per size class and trial.
    Sampled { per_size: usize },
}

/// Checks `E[mu_1(B)] = |B|/n` and the tail
/// `Pr[mu_1(B) >= (|B|/n) e lambda] <= lambda^(-lambda |B|)` over `trials`
/// independent hash functions. The tail is only checked when `p1 <= 1/n`.
pub fn verify_mu1<T: Scalar>(
    n: usize,
    subset_size: usize,
    dist: &KeyDistribution<T>,
    trials: usize,
    lambda: f64,
    seed: u64,
) -> Result<MeasureReport> {
    if n == 0 || subset_size == 0 || subset_size > n {
        return Err(Error::invalid(format!("subset size must lie in 1..={n}")));
    }
    if trials < 100 {
        return Err(Error::invalid("at least 100 trials are required"));
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::invalid("lambda must be positive"));
    }
    let subset: Vec<WorkerId> = (0..subset_size).collect();
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let fam = HashFamily::new(1, n, derive_seed(seed, trial as u64)).expect("n >= 1");
            mu_r(&subset, dist, &fam, 1).expect("valid subset").to_f64()
        })
        .collect();

    let expected = subset_size as f64 / n as f64;
    let (mean, se) = mean_and_se(&values);
    let mean_verdict = Verdict::from_bool(within_three_se(mean, expected, se));

    let hypothesis = !(dist.p1() * T::from_count(n as u64)).definitely_greater(&T::one());
    let threshold = expected * E * lambda;
    let bound = (-(subset_size as f64) * lambda * lambda.ln()).exp();
    let rate = values.iter().filter(|&&v| v >= threshold).count() as f64 / trials as f64;
    let tail_verdict = if hypothesis {
        Verdict::from_bool(rate <= TAIL_SLACK * bound)
    } else {
        Verdict::Skipped
    };

    Ok(MeasureReport {
        check: "mu1",
        n,
        d: 1,
        keys: dist.len(),
        p1: dist.p1().to_f64(),
        trials,
        subset_size,
        empirical_mean: mean,
        expected_mean: expected,
        std_error: se,
        mean_verdict,
        tail_threshold: Some(threshold),
        tail_bound: Some(bound),
        tail_rate: Some(rate),
        tail_verdict,
        max_subset_ratio: None,
        violation_rate: None,
        ratio_verdict: Verdict::Skipped,
        max_overloaded_bins: None,
        overloaded_verdict: Verdict::Skipped,
        verdict: mean_verdict.combine(tail_verdict),
    })
}

/// Keys grouped by the bitmask of their first `r` choices, with their total mass.
fn mass_by_mask<T: Scalar>(dist: &KeyDistribution<T>, family: &HashFamily, r: usize) -> Vec<(u64, T)> {
    let mut masks: BTreeMap<u64, T> = BTreeMap::new();
    for (key, p) in dist.probs().iter().enumerate() {
        let mask = (0..r).fold(0u64, |m, i| m | 1 << family.choice(i, key as u64));
        let e = masks.entry(mask).or_insert_with(T::zero);
        *e = e.clone() + p.clone();
    }
    masks.into_iter().collect()
}

/// All `k`-subsets of `0..n` as bitmasks (Gosper's hack).
pub(crate) fn k_subsets(n: usize, k: usize) -> impl Iterator<Item = u64> {
    let limit = 1u64 << n;
    let mut next = if k == 0 || k > n { limit } else { (1u64 << k) - 1 };
    std::iter::from_fn(move || {
        if next >= limit {
            return None;
        }
        let cur = next;
        let c = cur & cur.wrapping_neg();
        let r = cur + c;
        next = (((r ^ cur) >> 2) / c) | r;
        Some(cur)
    })
}

fn random_subset<R: rand::Rng>(n: usize, k: usize, rng: &mut R) -> u64 {
    rand::seq::index::sample(rng, n, k)
        .into_iter()
        .fold(0u64, |m, i| m | 1 << i)
}

/// `max mu_d(B) / (|B|/n)` over subsets with `1 <= |B| <= n/5`, and whether
/// any subset definitely exceeds its fair share.
pub(crate) fn max_subset_ratio<T: Scalar>(
    dist: &KeyDistribution<T>,
    family: &HashFamily,
    subsets: impl Iterator<Item = u64>,
) -> (f64, bool) {
    let n = family.n();
    let masses = mass_by_mask(dist, family, family.d());
    let mut best = 0.0f64;
    let mut violated = false;
    for b in subsets {
        let mut mu = T::zero();
        for (mask, w) in &masses {
            if mask & !b == 0 {
                mu = mu + w.clone();
            }
        }
        let size = b.count_ones() as u64;
        // mu / (|B|/n) > 1  <=>  mu * n > |B|
        let scaled = mu * T::from_count(n as u64);
        violated |= scaled.definitely_greater(&T::from_count(size));
        best = best.max(scaled.to_f64() / size as f64);
    }
    (best, violated)
}

/// Bins with `mu_1({j}) >= 3e/n`.
pub fn overloaded_bins<T: Scalar>(dist: &KeyDistribution<T>, family: &HashFamily) -> Vec<WorkerId> {
    let n = family.n();
    let mut mass = vec![0.0f64; n];
    for (key, p) in dist.probs().iter().enumerate() {
        mass[family.choice(0, key as u64)] += p.to_f64();
    }
    let threshold = 3.0 * E / n as f64;
    (0..n).filter(|&j| mass[j] >= threshold).collect()
}

struct Trial {
    max_ratio: f64,
    violated: bool,
    fixed_subset_mu: f64,
    overloaded: usize,
}

/// Per trial draws a fresh `d`-function family and computes the largest
/// subset ratio over `|B| <= n/5`; also checks
/// `E[mu_d(B)] = (|B|/n)^d` on the fixed subset `{0, .., n/5 - 1}` and the
/// size of the overloaded-bin set. The ratio gate only applies when
/// `p1 <= 1/(5n)`.
pub fn verify_mu_d_subsets<T: Scalar>(
    n: usize,
    dist: &KeyDistribution<T>,
    d: usize,
    trials: usize,
    mode: SubsetMode,
    seed: u64,
) -> Result<MeasureReport> {
    if n < 5 {
        return Err(Error::invalid("subsets of size <= n/5 need n >= 5"));
    }
    if n > 63 {
        return Err(Error::invalid("subset checks support at most 63 workers"));
    }
    if mode == SubsetMode::Exhaustive && n > EXHAUSTIVE_MAX_N {
        return Err(Error::config(format!(
            "exhaustive subset enumeration is capped at n = {EXHAUSTIVE_MAX_N}; use sampled mode"
        )));
    }
    if d == 0 || d > n {
        return Err(Error::invalid(format!("d must lie in 1..={n}")));
    }
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let max_size = n / 5;
    let fixed: Vec<WorkerId> = (0..max_size).collect();

    let results: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let fam = HashFamily::new(d, n, derive_seed(seed, trial as u64)).expect("valid shape");
            let (max_ratio, violated) = match mode {
                SubsetMode::Exhaustive => {
                    max_subset_ratio(dist, &fam, (1..=max_size).flat_map(|k| k_subsets(n, k)))
                }
                SubsetMode::Sampled { per_size } => {
                    use rand::SeedableRng;
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(
                        seed ^ 0x5eed,
                        trial as u64,
                    ));
                    let subsets: Vec<u64> = (1..=max_size)
                        .flat_map(|k| (0..per_size).map(move |_| k))
                        .map(|k| random_subset(n, k, &mut rng))
                        .collect();
                    max_subset_ratio(dist, &fam, subsets.into_iter())
                }
            };
            Trial {
                max_ratio,
                violated,
                fixed_subset_mu: mu_r(&fixed, dist, &fam, d).expect("valid subset").to_f64(),
                overloaded: overloaded_bins(dist, &fam).len(),
            }
        })
        .collect();

    let fixed_values: Vec<f64> = results.iter().map(|t| t.fixed_subset_mu).collect();
    let expected = (max_size as f64 / n as f64).powi(d as i32);
    let (mean, se) = mean_and_se(&fixed_values);
    let mean_verdict = Verdict::from_bool(within_three_se(mean, expected, se));

    let hypothesis =
        !(dist.p1() * T::from_count(5 * n as u64)).definitely_greater(&T::one());
    let violations = results.iter().filter(|t| t.violated).count();
    let violation_rate = violations as f64 / trials as f64;
    let ratio_verdict = if hypothesis && d >= 2 {
        Verdict::from_bool(violation_rate <= VIOLATION_GATE)
    } else {
        Verdict::Skipped
    };
    let max_overloaded = results.iter().map(|t| t.overloaded).max().unwrap_or(0);
    // |A| <= n/5 must hold with high probability; gate at the same rate.
    let overloaded_rate =
        results.iter().filter(|t| t.overloaded > max_size).count() as f64 / trials as f64;
    let overloaded_verdict = if hypothesis {
        Verdict::from_bool(overloaded_rate <= VIOLATION_GATE)
    } else {
        Verdict::Skipped
    };

    Ok(MeasureReport {
        check: "mu-d-subsets",
        n,
        d,
        keys: dist.len(),
        p1: dist.p1().to_f64(),
        trials,
        subset_size: max_size,
        empirical_mean: mean,
        expected_mean: expected,
        std_error: se,
        mean_verdict,
        tail_threshold: None,
        tail_bound: None,
        tail_rate: None,
        tail_verdict: Verdict::Skipped,
        max_subset_ratio: Some(results.iter().map(|t| t.max_ratio).fold(0.0, f64::max)),
        violation_rate: Some(violation_rate),
        ratio_verdict,
        max_overloaded_bins: Some(max_overloaded),
        overloaded_verdict,
        verdict: mean_verdict.combine(ratio_verdict).combine(overloaded_verdict),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    /// Binomial coefficient by the multiplicative formula.
    fn choose(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn gosper_enumerates_every_subset_once() {
        for n in 1..=10 {
            for k in 0..=n {
                let subsets: Vec<u64> = k_subsets(n, k).collect();
                let expected = if k == 0 { 0 } else { choose(n as u64, k as u64) };
                assert_eq!(subsets.len() as u64, expected, "n={n} k={k}");
                assert!(subsets.iter().all(|s| s.count_ones() as usize == k && *s < 1 << n));
                let mut dedup = subsets.clone();
                dedup.sort();
                dedup.dedup();
                assert_eq!(dedup.len(), subsets.len());
            }
        }
    }

    #[test]
    fn subset_ratio_agrees_with_direct_mu() {
        let dist = crate::workloads::zipf_probs(40, 0.7).unwrap();
        let fam = HashFamily::new(2, 10, 3).unwrap();
        for b in k_subsets(10, 2) {
            let members: Vec<usize> = (0..10).filter(|i| b >> i & 1 == 1).collect();
            let direct = mu_r(&members, &dist, &fam, 2).unwrap();
            let (ratio, _) = max_subset_ratio(&dist, &fam, std::iter::once(b));
            assert!((ratio - direct * 10.0 / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_subset_is_trivially_one() {
        let dist = KeyDistribution::<BigRational>::uniform(100).unwrap();
        let r = verify_mu1(10, 10, &dist, 100, 2.0, 1).unwrap();
        assert_eq!(r.std_error, 0.0);
        assert!((r.empirical_mean - 1.0).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn mu1_single_bin_mean() {
        let dist = KeyDistribution::<f64>::uniform(100).unwrap();
        let r = verify_mu1(10, 1, &dist, 5000, 2.0, 42).unwrap();
        assert_eq!(r.mean_verdict, Verdict::Pass, "{r}");
    }

    #[test]
    fn mu1_tail_bound_lambda_e() {
        let dist = KeyDistribution::<f64>::uniform(200).unwrap();
        let r = verify_mu1(10, 2, &dist, 1000, E, 7).unwrap();
        assert!(r.tail_rate.unwrap() <= 2.0 * (-E).exp().powi(2));
        assert_eq!(r.tail_verdict, Verdict::Pass);
    }

    #[test]
    fn mu1_tail_skipped_when_top_key_heavy() {
        let dist = crate::workloads::zipf_probs(100, 1.5).unwrap();
        let r = verify_mu1(10, 1, &dist, 200, 2.0, 7).unwrap();
        assert_eq!(r.tail_verdict, Verdict::Skipped);
        assert_ne!(r.mean_verdict, Verdict::Skipped);
    }

    #[test]
    fn mu1_argument_errors() {
        let dist = KeyDistribution::<f64>::uniform(10).unwrap();
        assert!(verify_mu1(10, 0, &dist, 100, 2.0, 0).is_err());
        assert!(verify_mu1(10, 11, &dist, 100, 2.0, 0).is_err());
        assert!(verify_mu1(10, 1, &dist, 99, 2.0, 0).is_err());
    }

    #[test]
    fn exhaustive_cap() {
        let dist = KeyDistribution::<f64>::uniform(1000).unwrap();
        let err = verify_mu_d_subsets(24, &dist, 2, 10, SubsetMode::Exhaustive, 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        verify_mu_d_subsets(24, &dist, 2, 10, SubsetMode::Sampled { per_size: 50 }, 0).unwrap();
    }

    #[test]
    fn d1_subset_mean_matches_fair_share() {
        let dist = KeyDistribution::<f64>::uniform(200).unwrap();
        let r = verify_mu_d_subsets(10, &dist, 1, 2000, SubsetMode::Exhaustive, 5).unwrap();
        assert_eq!(r.expected_mean, 0.2);
        assert_eq!(r.mean_verdict, Verdict::Pass, "{r}");
        assert_eq!(r.ratio_verdict, Verdict::Skipped);
    }

    #[test]
    fn exact_and_float_agree() {
        let exact = KeyDistribution::<BigRational>::uniform(50).unwrap();
        let float = exact.to_f64();
        let a = verify_mu_d_subsets(10, &exact, 2, 50, SubsetMode::Exhaustive, 9).unwrap();
        let b = verify_mu_d_subsets(10, &float, 2, 50, SubsetMode::Exhaustive, 9).unwrap();
        assert_eq!(a.violation_rate, b.violation_rate);
        assert!((a.max_subset_ratio.unwrap() - b.max_subset_ratio.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn overloaded_set_of_a_concentrated_family() {
        let dist = KeyDistribution::<f64>::uniform(4).unwrap();
        let fam = HashFamily::explicit(10, vec![vec![0], vec![0], vec![1], vec![2]]).unwrap();
        // masses 0.5, 0.25, 0.25 against a threshold of 3e/10 ~ 0.815
        assert!(overloaded_bins(&dist, &fam).is_empty());
        let fam = HashFamily::explicit(3, vec![vec![0], vec![0], vec![0], vec![2]]).unwrap();
        // threshold 3e/3 > 1: nothing can be overloaded
        assert!(overloaded_bins(&dist, &fam).is_empty());
    }
}
