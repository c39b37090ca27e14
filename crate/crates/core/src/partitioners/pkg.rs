use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{argmin_random, Partitioner};
use crate::hashing::HashFamily;
use crate::types::{KeyId, LoadVector, WorkerId};

/// Partial key grouping decision: the least loaded of the first `d` hash
/// choices according to `estimate` (lowest worker index on ties), after
/// which that estimate entry is incremented. No per-key state is kept.
#[inline]
pub fn pkg_route(family: &HashFamily, key: KeyId, d: usize, estimate: &mut LoadVector) -> WorkerId {
    let best = greedy_choice(family, key, d, estimate);
    estimate.increment(best);
    best
}

#[inline]
fn greedy_choice(family: &HashFamily, key: KeyId, d: usize, loads: &LoadVector) -> WorkerId {
    let mut best = family.choice(0, key);
    for i in 1..d {
        let c = family.choice(i, key);
        if loads[c] < loads[best] || (loads[c] == loads[best] && c < best) {
            best = c;
        }
    }
    best
}

/// Replaces a local estimate with the true worker loads.
pub fn probe_sync(estimate: &mut LoadVector, global: &LoadVector) {
    estimate.copy_from(global);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    /// Balance the load this source generated (optionally refreshed by probes).
    Local,
    /// Read the true global loads at every decision.
    Global,
}

#[derive(Debug, Clone)]
pub struct Pkg {
    family: HashFamily,
    d: usize,
    mode: EstimateMode,
    estimate: LoadVector,
    rng: Option<ChaCha8Rng>,
}

impl Pkg {
    pub fn new(family: HashFamily, d: usize, workers: usize, mode: EstimateMode) -> Self {
        assert!(d >= 1 && d <= family.d(), "d must lie in 1..={}", family.d());
        Pkg {
            family,
            d,
            mode,
            estimate: LoadVector::zeros(workers),
            rng: None,
        }
    }

    pub fn with_random_ties(mut self, seed: u64) -> Self {
        self.rng = Some(ChaCha8Rng::seed_from_u64(seed));
        self
    }
}

impl Partitioner for Pkg {
    fn route(&mut self, key: KeyId, global: &LoadVector) -> WorkerId {
        let view = match self.mode {
            EstimateMode::Local => &self.estimate,
            EstimateMode::Global => global,
        };
        let w = match &mut self.rng {
            None => greedy_choice(&self.family, key, self.d, view),
            Some(rng) => {
                let fam = &self.family;
                argmin_random(view, (0..self.d).map(|i| fam.choice(i, key)), rng)
            }
        };
        if self.mode == EstimateMode::Local {
            self.estimate.increment(w);
        }
        w
    }

    fn probe(&mut self, global: &LoadVector) {
        if self.mode == EstimateMode::Local {
            probe_sync(&mut self.estimate, global);
        }
    }

    fn local_estimate(&self) -> Option<&LoadVector> {
        match self.mode {
            EstimateMode::Local => Some(&self.estimate),
            EstimateMode::Global => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_min_and_self_accounts() {
        let fam = HashFamily::explicit(4, vec![vec![1, 3]]).unwrap();
        let mut est = LoadVector::from(vec![0, 2, 0, 1]);
        assert_eq!(pkg_route(&fam, 0, 2, &mut est), 3);
        assert_eq!(est.as_slice(), &[0, 2, 0, 2]);
        // tie: lowest worker index
        assert_eq!(pkg_route(&fam, 0, 2, &mut est), 1);
    }

    #[test]
    fn alternation_on_a_single_key() {
        let fam = HashFamily::explicit(4, vec![vec![2, 0]]).unwrap();
        let mut est = LoadVector::zeros(4);
        let k = 500;
        for _ in 0..2 * k {
            pkg_route(&fam, 0, 2, &mut est);
        }
        assert_eq!(est.as_slice(), &[k, 0, k, 0]);
    }

    #[test]
    fn exhaustive_family_is_global_least_loaded() {
        let w = 7;
        let fam = HashFamily::exhaustive(w).unwrap();
        let mut est = LoadVector::zeros(w);
        for t in 1..=1000u64 {
            pkg_route(&fam, t * 31, w, &mut est);
            assert!(est.imbalance().unwrap() <= 1.0);
        }
    }

    #[test]
    fn probe_overwrites() {
        let mut est = LoadVector::from(vec![1, 2]);
        probe_sync(&mut est, &vec![100, 50].into());
        assert_eq!(est.as_slice(), &[100, 50]);

        let fam = HashFamily::explicit(2, vec![vec![0, 1]]).unwrap();
        let mut p = Pkg::new(fam, 2, 2, EstimateMode::Local);
        let global = LoadVector::from(vec![100, 50]);
        assert_eq!(p.route(0, &global), 0);
        p.probe(&global);
        assert_eq!(p.route(0, &global), 1);
        assert_eq!(p.local_estimate().unwrap().as_slice(), &[100, 51]);
    }

    #[test]
    fn global_mode_reads_true_loads() {
        let fam = HashFamily::explicit(2, vec![vec![0, 1]]).unwrap();
        let mut p = Pkg::new(fam, 2, 2, EstimateMode::Global);
        assert_eq!(p.route(0, &vec![3, 1].into()), 1);
        assert_eq!(p.route(0, &vec![3, 1].into()), 1);
        assert!(p.local_estimate().is_none());
    }
}
