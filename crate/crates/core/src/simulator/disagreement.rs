use serde::Serialize;

use super::run_stream;
use crate::config::{SimConfig, Strategy};
use crate::error::{Error, Result};
use crate::workloads::{Stream, WorkloadSpec};

/// Guards the denominator of [`Disagreement::balance_ratio`].
pub const BALANCE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disagreement {
    /// Percentage (0..=100) of messages the two variants routed differently.
    pub percent_disagree: f64,
    /// `fraction_avg_imbalance(local) / max(fraction_avg_imbalance(global), eps)`.
    pub balance_ratio: f64,
    pub local_imbalance: f64,
    pub global_imbalance: f64,
}

/// Runs the local-estimate configuration and its global-oracle twin over the
/// same stream and hash family and compares their decisions.
pub fn measure_disagreement_on(config: &SimConfig, stream: &Stream) -> Result<Disagreement> {
    if !matches!(config.strategy, Strategy::PkgLocal | Strategy::PkgProbe) {
        return Err(Error::config(format!(
            "disagreement compares local estimation with the oracle; got strategy {}",
            config.strategy
        )));
    }
    let mut local_cfg = config.clone();
    local_cfg.log_decisions = true;
    let mut global_cfg = local_cfg.clone();
    global_cfg.strategy = Strategy::PkgGlobal;
    global_cfg.probe_period = None;

    let local = run_stream(&local_cfg, stream)?;
    let global = run_stream(&global_cfg, stream)?;
    let (ld, gd) = (
        local.decisions.as_deref().unwrap_or_default(),
        global.decisions.as_deref().unwrap_or_default(),
    );
    let differ = ld.iter().zip(gd).filter(|(a, b)| a.worker != b.worker).count();
    Ok(Disagreement {
        percent_disagree: 100.0 * differ as f64 / ld.len() as f64,
        balance_ratio: local.fraction_avg_imbalance
            / global.fraction_avg_imbalance.max(BALANCE_EPSILON),
        local_imbalance: local.fraction_avg_imbalance,
        global_imbalance: global.fraction_avg_imbalance,
    })
}

pub fn measure_disagreement(config: &SimConfig, workload: &WorkloadSpec) -> Result<Disagreement> {
    measure_disagreement_on(config, &workload.materialize()?)
}
