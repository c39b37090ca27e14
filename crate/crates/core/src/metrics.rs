//! Load and imbalance statistics.

use crate::error::{Error, Result};
use crate::types::LoadVector;

/// `max(loads) - mean(loads)`.
pub fn imbalance(loads: &LoadVector) -> Result<f64> {
    loads.imbalance()
}

/// Time-averaged imbalance normalized by the stream length.
///
/// `series` holds `(t, I(t))` samples taken at a uniform stride.
pub fn fraction_avg_imbalance(series: &[(u64, f64)], m: u64) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::invalid("empty imbalance series"));
    }
    if m == 0 {
        return Err(Error::invalid("stream length must be positive"));
    }
    let mean = series.iter().map(|&(_, i)| i).sum::<f64>() / series.len() as f64;
    Ok(mean / m as f64)
}

/// Upper bound on `I(t)` for `W` workers after `t` messages.
pub fn max_possible_imbalance(t: u64, workers: usize) -> f64 {
    t as f64 * (1.0 - 1.0 / workers as f64)
}
