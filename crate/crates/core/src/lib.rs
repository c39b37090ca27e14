//! Stream partitioning with partial key grouping.
//!
//! Every key may go to one of `d` hashed workers; each source picks the one
//! it believes least loaded from its own count of what it has sent. The crate
//! contains the partitioners, workload generators, a message-level simulator
//! and Monte Carlo checks of the underlying balls-and-bins bounds.
//!
//! Probability and imbalance arithmetic is generic over [`Scalar`]
//! (`f32`, `f64`, exact `BigRational`); routing state is integral.

pub mod config;
pub mod dist;
pub mod error;
pub mod hashing;
pub mod metrics;
pub mod partitioners;
pub mod scalar;
pub mod simulator;
pub mod theory;
pub mod types;
pub mod workloads;

pub use config::{Dispatch, KeyTracking, ProbePhase, SimConfig, Strategy, TieBreak};
pub use error::{Error, Result};
pub use hashing::HashFamily;
pub use scalar::Scalar;
pub use types::{KeyId, LoadVector, Message, WorkerId};

/// Exact rational used by the exact-arithmetic checks.
pub type Rational = num_rational::BigRational;

/// Key distribution over `f64`, the default precision.
pub type KeyDistribution = dist::KeyDistribution<f64>;
/// Key distribution over `f32`.
pub type KeyDistributionF32 = dist::KeyDistribution<f32>;
/// Key distribution with exact rational probabilities.
pub type ExactKeyDistribution = dist::KeyDistribution<Rational>;
