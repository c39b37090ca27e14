use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, One};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use super::Stream;
use crate::dist::KeyDistribution;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Zipf probabilities over ranks `1..=keys`: `r^-z / sum_x x^-z`.
pub fn zipf_probs<T: Float + Scalar>(keys: usize, z: T) -> Result<KeyDistribution<T>> {
    if keys == 0 {
        return Err(Error::invalid("zipf needs at least one key"));
    }
    if z.is_nan() || z < T::zero() || z.is_infinite() {
        return Err(Error::invalid("zipf exponent must be non-negative"));
    }
    let weights: Vec<T> = (1..=keys)
        .map(|r| T::from_count(r as u64).powf(-z))
        .collect();
    // Sum from the smallest weight up to limit rounding error.
    let total = weights.iter().rev().fold(T::zero(), |acc, &w| acc + w);
    let mut probs: Vec<T> = weights.into_iter().map(|w| w / total).collect();
    // Rounding can break monotonicity between nearly equal neighbours.
    for i in 1..probs.len() {
        if probs[i] > probs[i - 1] {
            probs[i] = probs[i - 1];
        }
    }
    KeyDistribution::new(probs)
}

/// Exact Zipf probabilities for an integral exponent.
pub fn zipf_probs_exact(keys: usize, z: u32) -> Result<KeyDistribution<BigRational>> {
    if keys == 0 {
        return Err(Error::invalid("zipf needs at least one key"));
    }
    let weights = (1..=keys)
        .map(|r| BigRational::new(BigInt::one(), BigInt::from(r).pow(z)))
        .collect();
    KeyDistribution::from_weights(weights)
}

/// One log-normal weight per key, normalized and sorted non-increasing.
fn check_lognormal(mu: f64, sigma: f64) -> Result<()> {
    if !mu.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("log-normal needs finite mu and sigma > 0, got ({mu}, {sigma})")));
    }
    Ok(())
}

pub fn lognormal_probs(keys: usize, mu: f64, sigma: f64, seed: u64) -> Result<KeyDistribution<f64>> {
    if keys == 0 {
        return Err(Error::invalid("log-normal needs at least one key"));
    }
    check_lognormal(mu, sigma)?;
    let ln = LogNormal::new(mu, sigma)
        .map_err(|e| Error::invalid(format!("log-normal parameters: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..keys).map(|_| ln.sample(&mut rng)).collect();
    KeyDistribution::from_weights(weights)
}

/// Keys are integer values `v = round(X)` with `X ~ LogNormal(mu, sigma)`,
/// restricted to `v < keys` and renormalized. Deterministic.
pub fn lognormal_rounded_probs(keys: usize, mu: f64, sigma: f64) -> Result<KeyDistribution<f64>> {
    if keys == 0 {
        return Err(Error::invalid("log-normal needs at least one key"));
    }
    check_lognormal(mu, sigma)?;
    let normal = Normal::new(mu, sigma)
        .map_err(|e| Error::invalid(format!("log-normal parameters: {e}")))?;
    let cdf = |x: f64| if x <= 0.0 { 0.0 } else { normal.cdf(x.ln()) };
    let weights: Vec<f64> = (0..keys)
        .map(|v| {
            let lo = v as f64 - 0.5;
            cdf(v as f64 + 0.5) - cdf(lo)
        })
        .collect();
    KeyDistribution::from_weights(weights)
}

/// `m` i.i.d. keys drawn by inverse CDF lookup.
pub fn sample_stream<T: Scalar>(dist: &KeyDistribution<T>, m: u64, seed: u64) -> Stream {
    let cdf = dist.cumulative();
    let last = cdf.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys = (0..m)
        .map(|_| {
            let u: f64 = rng.random();
            cdf.partition_point(|&c| c <= u).min(last) as u64
        })
        .collect();
    Stream::new(keys, dist.len())
}
