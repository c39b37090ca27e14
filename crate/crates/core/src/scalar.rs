//! Scalar abstraction for probability and imbalance arithmetic.
//!
//! Routing state is integer-only. Everything derived from it (imbalance,
//! key probabilities, subset measures) is computed in a [`Scalar`], which
//! is `f64` for simulation work, `f32` where memory matters, and
//! [`BigRational`] when ties must be decided exactly.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

pub trait Scalar: Num + Clone + PartialOrd + Debug + Send + Sync + 'static {
    /// Slack allowed when checking that probabilities sum to one.
    const SUM_TOLERANCE: f64;

    fn from_count(n: u64) -> Self;

    fn to_f64(&self) -> f64;

    /// `self > other` beyond rounding noise. Exact types compare exactly;
    /// floating types require a relative margin of `1e-9`.
    fn definitely_greater(&self, other: &Self) -> bool {
        self > other
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    const SUM_TOLERANCE: f64 = 1e-9;

    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn definitely_greater(&self, other: &Self) -> bool {
        *self > *other + 1e-9 * other.abs().max(1e-300)
    }
}

impl Scalar for f32 {
    const SUM_TOLERANCE: f64 = 1e-5;

    fn from_count(n: u64) -> Self {
        n as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }

    fn definitely_greater(&self, other: &Self) -> bool {
        f64::from(*self).definitely_greater(&f64::from(*other))
    }
}

impl Scalar for BigRational {
    const SUM_TOLERANCE: f64 = 0.0;

    fn from_count(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Exact `num / den` as a rational.
pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_comparison_ignores_rounding() {
        let five_hundredths: f64 = (0..5).map(|_| 0.01).sum();
        assert!(!(five_hundredths * 20.0).definitely_greater(&1.0));
        assert!(1.001f64.definitely_greater(&1.0));
        assert!(!ratio(1, 20).definitely_greater(&ratio(5, 100)));
        assert!(ratio(51, 1000).definitely_greater(&ratio(5, 100)));
    }
}
