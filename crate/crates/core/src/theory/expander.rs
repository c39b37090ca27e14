//! Two independent computations of the same property on small instances.
//!
//! With `k = floor(n/5)`:
//! * subset ratio: `mu_d(B) <= |B|/n` for every `B` with `1 <= |B| <= k`;
//! * expansion: every key set `A` has `|Gamma(A)| > k` or `|Gamma(A)| >= n p(A)`,
//!   where `Gamma(A)` is the set of workers adjacent to `A` in the key-worker graph.
//!
//! The looser reading `|Gamma(A)| >= min(n p(A), n/5)` accepts `|Gamma(A)| = n/5`
//! unconditionally when `5 | n`, so it is tracked separately as a diagnostic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::mu::k_subsets;
use crate::dist::KeyDistribution;
use crate::error::Result;
use crate::hashing::{derive_seed, HashFamily};

/// A weighted key set with explicit choices per key.
#[derive(Debug, Clone)]
pub struct Instance {
    pub dist: KeyDistribution<BigRational>,
    pub family: HashFamily,
}

impl Instance {
    pub fn new(weights: &[u64], choices: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let weights: Vec<BigRational> = weights.iter().map(|&w| BigRational::from_integer(w.into())).collect();
        let dist = KeyDistribution::from_weights(weights)?;
        let family = HashFamily::explicit(n, choices)?;
        Ok(Instance { dist, family })
    }

    fn n(&self) -> usize {
        self.family.n()
    }

    fn key_mask(&self, key: usize) -> u64 {
        (0..self.family.d()).fold(0u64, |m, i| m | 1 << self.family.choice(i, key as u64))
    }
}

fn small_limit(n: usize) -> usize {
    n / 5
}

/// `mu_d(B) <= |B|/n` for all `1 <= |B| <= floor(n/5)`, in exact arithmetic.
pub fn subset_ratio_property(inst: &Instance) -> bool {
    let n = inst.n();
    let d = inst.family.d();
    let nn = BigRational::from_integer(BigInt::from(n));
    (1..=small_limit(n)).all(|k| {
        let fair = BigRational::from_integer(BigInt::from(k));
        k_subsets(n, k).all(|b| {
            let members: Vec<usize> = (0..n).filter(|i| b >> i & 1 == 1).collect();
            let mu = super::mu_r(&members, &inst.dist, &inst.family, d).expect("valid subset");
            mu * &nn <= fair
        })
    })
}

/// Keys grouped by neighbourhood, each with its total probability.
fn neighbourhood_classes(inst: &Instance) -> Vec<(u64, BigRational)> {
    let mut classes: Vec<(u64, BigRational)> = Vec::new();
    for (key, p) in inst.dist.probs().iter().enumerate() {
        let mask = inst.key_mask(key);
        match classes.iter_mut().find(|(m, _)| *m == mask) {
            Some((_, w)) => *w += p,
            None => classes.push((mask, p.clone())),
        }
    }
    classes
}

/// Searches key sets `A` in the key-worker graph for one violating
/// `|Gamma(A)| > limit || |Gamma(A)| >= n p(A)` (strict `>` replaced by `>=`
/// on the limit when `inclusive`). Keys with identical neighbourhoods are
/// merged: adding such a key leaves `Gamma(A)` unchanged and only raises `p(A)`.
fn expansion_search(inst: &Instance, limit: usize, inclusive: bool) -> bool {
    let n = BigRational::from_integer(BigInt::from(inst.n()));
    let classes = neighbourhood_classes(inst);
    let exempt = |g: usize| if inclusive { g >= limit } else { g > limit };

    fn dfs(
        classes: &[(u64, BigRational)],
        start: usize,
        gamma: u64,
        mass: &BigRational,
        n: &BigRational,
        exempt: &dyn Fn(usize) -> bool,
    ) -> bool {
        for i in start..classes.len() {
            let (mask, w) = &classes[i];
            let g = gamma | mask;
            let size = g.count_ones() as usize;
            // |Gamma| never shrinks along a branch, so every superset is exempt too
            if exempt(size) {
                continue;
            }
            let m = mass + w;
            if BigRational::from_integer(BigInt::from(size)) < n * &m {
                return false;
            }
            if !dfs(classes, i + 1, g, &m, n, exempt) {
                return false;
            }
        }
        true
    }

    dfs(&classes, 0, 0, &BigRational::zero(), &n, &exempt)
}

/// `|Gamma(A)| > floor(n/5)` or `|Gamma(A)| >= n p(A)` for every key set `A`.
pub fn expansion_property(inst: &Instance) -> bool {
    expansion_search(inst, small_limit(inst.n()), false)
}

/// `|Gamma(A)| >= min(n p(A), n/5)` for every key set `A`.
pub fn min_form_expansion_property(inst: &Instance) -> bool {
    let n = inst.n();
    if n.is_multiple_of(5) {
        expansion_search(inst, n / 5, true)
    } else {
        // |Gamma| is an integer, so |Gamma| >= n/5 iff |Gamma| > floor(n/5)
        expansion_search(inst, n / 5, false)
    }
}

/// Random instance with `2 <= n <= 12`, `1 <= K <= 60`, `1 <= d <= 3`.
pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let n = rng.random_range(2..=12usize);
    let keys = rng.random_range(1..=60usize);
    let d = rng.random_range(1..=3usize.min(n));
    let mut weights: Vec<u64> = match rng.random_range(0..3) {
        0 => vec![1; keys],
        1 => (1..=keys as u64).map(|i| 3600 / i).collect(),
        _ => (0..keys).map(|_| rng.random_range(0..=20)).collect(),
    };
    if rng.random_bool(0.3) {
        weights[0] += rng.random_range(1..=50u64) * keys as u64;
    }
    if weights.iter().all(|&w| w == 0) {
        weights[0] = 1;
    }
    weights.sort_unstable_by(|a, b| b.cmp(a));
    let choices = (0..keys)
        .map(|_| (0..d).map(|_| rng.random_range(0..n)).collect())
        .collect();
    Instance::new(&weights, choices, n).expect("generated instance is well formed")
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub instances: usize,
    /// Instances on which the subset-ratio property holds.
    pub property_holds: usize,
    /// Indices where subset ratio and expansion disagree.
    pub disagreements: Vec<usize>,
    /// Indices where the `min(n p(A), n/5)` reading differs from the subset ratio.
    pub min_form_mismatches: Vec<usize>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Compares both computations on `count` random instances.
pub fn check_expander_equivalence(count: usize, seed: u64) -> EquivalenceReport {
    let mut report = EquivalenceReport {
        instances: count,
        property_holds: 0,
        disagreements: Vec::new(),
        min_form_mismatches: Vec::new(),
    };
    for idx in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, idx as u64));
        let inst = random_instance(&mut rng);
        let ratio = subset_ratio_property(&inst);
        report.property_holds += ratio as usize;
        if ratio != expansion_property(&inst) {
            report.disagreements.push(idx);
        }
        if ratio != min_form_expansion_property(&inst) {
            report.min_form_mismatches.push(idx);
        }
    }
    report
}
