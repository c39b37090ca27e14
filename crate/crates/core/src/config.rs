use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Key grouping: first hash choice only.
    Kg,
    /// Shuffle grouping: per-source round robin.
    Sg,
    /// Power of two choices with a sticky per-key routing table.
    PotcStatic,
    /// New keys go to the globally least loaded worker, then stick.
    OnGreedy,
    /// Keys pre-assigned by decreasing frequency with full stream knowledge.
    OffGreedy,
    /// Partial key grouping with per-source local load estimates.
    PkgLocal,
    /// Partial key grouping against the true global loads.
    PkgGlobal,
    /// Local estimates periodically overwritten with the true loads.
    PkgProbe,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::Kg,
        Strategy::Sg,
        Strategy::PotcStatic,
        Strategy::OnGreedy,
        Strategy::OffGreedy,
        Strategy::PkgLocal,
        Strategy::PkgGlobal,
        Strategy::PkgProbe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Kg => "kg",
            Strategy::Sg => "sg",
            Strategy::PotcStatic => "potc-static",
            Strategy::OnGreedy => "on-greedy",
            Strategy::OffGreedy => "off-greedy",
            Strategy::PkgLocal => "pkg-local",
            Strategy::PkgGlobal => "pkg-global",
            Strategy::PkgProbe => "pkg-probe",
        }
    }

    /// Strategies whose state is one shared table or view rather than
    /// independent per-source state.
    pub fn is_coordinated(self) -> bool {
        matches!(
            self,
            Strategy::PotcStatic | Strategy::OnGreedy | Strategy::OffGreedy | Strategy::PkgGlobal
        )
    }

    /// Strategies that pin every key to exactly one worker.
    pub fn is_static(self) -> bool {
        matches!(
            self,
            Strategy::Kg | Strategy::PotcStatic | Strategy::OnGreedy | Strategy::OffGreedy
        )
    }

    pub fn is_pkg(self) -> bool {
        matches!(self, Strategy::PkgLocal | Strategy::PkgGlobal | Strategy::PkgProbe)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown strategy `{s}`")))
    }
}

/// How messages of the input stream are handed to sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dispatch {
    /// Message `t` goes to source `(t - 1) mod S`.
    RoundRobin,
    /// Each message goes to a uniformly random source.
    Shuffle,
    /// Hash of the message's source-assignment key (graph workloads).
    KeyGrouped,
}

impl FromStr for Dispatch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "round-robin" => Ok(Dispatch::RoundRobin),
            "shuffle" => Ok(Dispatch::Shuffle),
            "key-grouped" => Ok(Dispatch::KeyGrouped),
            other => Err(Error::invalid(format!("unknown dispatch `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    #[default]
    LowestIndex,
    Random,
}

/// Where in its period each source probes. Source `s` of `S` probes once its
/// own message count `c > 0` satisfies `c mod P = offset(s)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbePhase {
    /// `offset(s) = floor(s P / S)`: no two sources probe in the same round.
    #[default]
    Staggered,
    /// `offset(s) = 0`. Under round-robin dispatch every source probes in the
    /// same round, and all of them correct the same deficit at once.
    Aligned,
}

impl ProbePhase {
    pub fn offset(self, source: usize, sources: usize, period: u64) -> u64 {
        match self {
            ProbePhase::Staggered => source as u64 * period / sources as u64,
            ProbePhase::Aligned => 0,
        }
    }
}

impl FromStr for ProbePhase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "staggered" => Ok(ProbePhase::Staggered),
            "aligned" => Ok(ProbePhase::Aligned),
            other => Err(Error::invalid(format!("unknown probe phase `{other}`"))),
        }
    }
}

/// What the simulator remembers about which workers saw which key.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyTracking {
    #[default]
    Off,
    MaxSetSize,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub sources: usize,
    pub workers: usize,
    pub choices: usize,
    pub strategy: Strategy,
    pub seed: u64,
    /// Per-source probing interval in messages (`pkg-probe` only).
    #[serde(default)]
    pub probe_period: Option<u64>,
    #[serde(default)]
    pub probe_phase: ProbePhase,
    /// Metrics stride; defaults to `max(1, m / 1000)`.
    #[serde(default)]
    pub sample_interval: Option<u64>,
    #[serde(default)]
    pub tie_break: TieBreak,
    /// Defaults to key-grouped for graph workloads, round-robin otherwise.
    #[serde(default)]
    pub dispatch: Option<Dispatch>,
    #[serde(default)]
    pub log_decisions: bool,
    #[serde(default)]
    pub key_tracking: KeyTracking,
}

impl SimConfig {
    pub fn new(strategy: Strategy, sources: usize, workers: usize, choices: usize, seed: u64) -> Self {
        SimConfig {
            sources,
            workers,
            choices,
            strategy,
            seed,
            probe_period: None,
            probe_phase: ProbePhase::default(),
            sample_interval: None,
            tie_break: TieBreak::default(),
            dispatch: None,
            log_decisions: false,
            key_tracking: KeyTracking::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources == 0 {
            return Err(Error::config("at least one source is required"));
        }
        if self.workers == 0 {
            return Err(Error::config("at least one worker is required"));
        }
        if self.choices == 0 || self.choices > self.workers {
            return Err(Error::config(format!(
                "choices must lie in 1..={} (workers), got {}",
                self.workers, self.choices
            )));
        }
        if self.sample_interval == Some(0) {
            return Err(Error::config("sample_interval must be at least 1"));
        }
        match (self.strategy, self.probe_period) {
            (Strategy::PkgProbe, None) => {
                return Err(Error::config("pkg-probe requires probe_period"));
            }
            (Strategy::PkgProbe, Some(0)) => {
                return Err(Error::config("probe_period must be at least 1"));
            }
            (Strategy::PkgProbe, Some(_)) | (_, None) => {}
            (other, Some(_)) => {
                return Err(Error::config(format!(
                    "probe_period is only meaningful for pkg-probe, not {other}"
                )));
            }
        }
        Ok(())
    }

    pub fn sample_interval_for(&self, m: u64) -> u64 {
        self.sample_interval.unwrap_or((m / 1000).max(1))
    }
}
