use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probability vector over keys `0..K`, sorted non-increasing so that key 0
/// is the most frequent one.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyDistribution<T> {
    probs: Vec<T>,
}

impl<T: Scalar> KeyDistribution<T> {
    /// Validates an already normalized, sorted vector.
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("key distribution needs at least one key"));
        }
        if probs.iter().any(|p| *p < T::zero()) {
            return Err(Error::invalid("negative key probability"));
        }
        if probs.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("key probabilities must be non-increasing"));
        }
        let sum = probs.iter().fold(T::zero(), |acc, p| acc + p.clone());
        if (sum.to_f64() - 1.0).abs() > T::SUM_TOLERANCE {
            return Err(Error::invalid(format!(
                "key probabilities sum to {}, expected 1",
                sum.to_f64()
            )));
        }
        Ok(KeyDistribution { probs })
    }

    /// Normalizes arbitrary non-negative weights and sorts them non-increasing.
    pub fn from_weights(mut weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("key distribution needs at least one key"));
        }
        let total = weights.iter().fold(T::zero(), |acc, w| acc + w.clone());
        if total <= T::zero() {
            return Err(Error::invalid("weights must have a positive sum"));
        }
        for w in weights.iter_mut() {
            *w = w.clone() / total.clone();
        }
        weights.sort_by(|a, b| b.partial_cmp(a).expect("weights must be comparable"));
        KeyDistribution::new(weights)
    }

    pub fn uniform(keys: usize) -> Result<Self> {
        if keys == 0 {
            return Err(Error::invalid("key distribution needs at least one key"));
        }
        let p = T::one() / T::from_count(keys as u64);
        Ok(KeyDistribution {
            probs: vec![p; keys],
        })
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability of the most frequent key.
    pub fn p1(&self) -> T {
        self.probs[0].clone()
    }

    pub fn to_f64(&self) -> KeyDistribution<f64> {
        KeyDistribution {
            probs: self.probs.iter().map(Scalar::to_f64).collect(),
        }
    }

    /// Cumulative sums in `f64`, last entry pinned to exactly 1.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = self
            .probs
            .iter()
            .map(|p| {
                acc += p.to_f64();
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        cdf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    #[test]
    fn rejects_bad_vectors() {
        assert!(KeyDistribution::<f64>::new(vec![]).is_err());
        assert!(KeyDistribution::new(vec![0.4, 0.6]).is_err());
        assert!(KeyDistribution::new(vec![0.6, 0.3]).is_err());
        assert!(KeyDistribution::new(vec![0.6, 0.4]).is_ok());
    }

    #[test]
    fn weights_are_normalized_and_sorted() {
        let d = KeyDistribution::from_weights(vec![1.0, 3.0, 4.0]).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.375, 0.125]);
        assert_eq!(d.p1(), 0.5);
    }

    #[test]
    fn single_precision_tolerance() {
        let d = KeyDistribution::<f32>::from_weights((1..=1000).map(|r| 1.0 / r as f32).collect()).unwrap();
        assert_eq!(d.len(), 1000);
    }

    #[test]
    fn exact_uniform_sums_to_one() {
        let d = KeyDistribution::<BigRational>::uniform(7).unwrap();
        assert_eq!(d.p1(), ratio(1, 7));
        let total: BigRational = d.probs().iter().cloned().sum();
        assert_eq!(total, ratio(1, 1));
        assert_eq!(*d.cumulative().last().unwrap(), 1.0);
    }
}
