//! Key streams: synthetic generators and file ingestion.

mod files;
mod synthetic;

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use files::{graph_edge_stream, trace_stream};
pub use synthetic::{
    lognormal_probs, lognormal_rounded_probs, sample_stream, zipf_probs, zipf_probs_exact,
};

use crate::dist::KeyDistribution;
use crate::error::{Error, Result};
use crate::hashing::derive_seed;
use crate::types::{KeyId, Message};

/// A materialized stream of routing keys. Message `t` (1-based) carries
/// `keys[t - 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stream {
    pub keys: Vec<KeyId>,
    /// Per-message key used to assign messages to sources (graph workloads).
    pub source_keys: Option<Vec<KeyId>>,
    /// Size of the key universe (synthetic) or number of distinct keys seen (files).
    pub key_count: usize,
}

impl Stream {
    pub fn new(keys: Vec<KeyId>, key_count: usize) -> Self {
        Stream {
            keys,
            source_keys: None,
            key_count,
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn messages(&self) -> impl Iterator<Item = Message> + '_ {
        self.keys
            .iter()
            .enumerate()
            .map(|(i, &k)| Message::new(i as u64 + 1, k))
    }

    /// Occurrence count of every key.
    pub fn census(&self) -> HashMap<KeyId, u64> {
        let mut freqs = HashMap::new();
        for &k in &self.keys {
            *freqs.entry(k).or_insert(0) += 1;
        }
        freqs
    }

    pub fn truncate(&mut self, m: usize) {
        self.keys.truncate(m);
        if let Some(src) = &mut self.source_keys {
            src.truncate(m);
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LognormalConstruction {
    /// One log-normal weight per key, normalized and sorted.
    #[default]
    Weights,
    /// Keys are log-normal samples rounded to the nearest integer.
    Rounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WorkloadSpec {
    Zipf {
        keys: usize,
        z: f64,
        messages: u64,
        seed: u64,
    },
    Lognormal {
        keys: usize,
        mu: f64,
        sigma: f64,
        messages: u64,
        seed: u64,
        #[serde(default)]
        construction: LognormalConstruction,
    },
    Uniform {
        keys: usize,
        messages: u64,
        seed: u64,
    },
    Trace {
        path: PathBuf,
        #[serde(default)]
        messages: Option<u64>,
    },
    GraphEdges {
        path: PathBuf,
        #[serde(default)]
        messages: Option<u64>,
    },
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        let (keys, messages) = match self {
            WorkloadSpec::Zipf { keys, z, messages, .. } => {
                if !(z.is_finite() && *z >= 0.0) {
                    return Err(Error::config(format!("zipf exponent must be >= 0, got {z}")));
                }
                (Some(*keys), Some(*messages))
            }
            WorkloadSpec::Lognormal {
                keys,
                mu,
                sigma,
                messages,
                ..
            } => {
                if !(sigma.is_finite() && *sigma > 0.0) || !mu.is_finite() {
                    return Err(Error::config(format!(
                        "log-normal needs finite mu and sigma > 0, got mu={mu} sigma={sigma}"
                    )));
                }
                (Some(*keys), Some(*messages))
            }
            WorkloadSpec::Uniform { keys, messages, .. } => (Some(*keys), Some(*messages)),
            WorkloadSpec::Trace { messages, .. } | WorkloadSpec::GraphEdges { messages, .. } => {
                (None, *messages)
            }
        };
        if keys == Some(0) {
            return Err(Error::config("workload needs at least one key"));
        }
        if messages == Some(0) {
            return Err(Error::config("workload needs at least one message"));
        }
        Ok(())
    }

    pub fn is_graph(&self) -> bool {
        matches!(self, WorkloadSpec::GraphEdges { .. })
    }

    /// The key distribution of synthetic workloads; `None` for file workloads.
    pub fn distribution(&self) -> Result<Option<KeyDistribution<f64>>> {
        self.validate()?;
        let dist = match *self {
            WorkloadSpec::Zipf { keys, z, .. } => zipf_probs(keys, z)?,
            WorkloadSpec::Lognormal {
                keys,
                mu,
                sigma,
                seed,
                construction,
                ..
            } => match construction {
                LognormalConstruction::Weights => {
                    lognormal_probs(keys, mu, sigma, derive_seed(seed, 1))?
                }
                LognormalConstruction::Rounded => lognormal_rounded_probs(keys, mu, sigma)?,
            },
            WorkloadSpec::Uniform { keys, .. } => KeyDistribution::uniform(keys)?,
            WorkloadSpec::Trace { .. } | WorkloadSpec::GraphEdges { .. } => return Ok(None),
        };
        Ok(Some(dist))
    }

    pub fn materialize(&self) -> Result<Stream> {
        self.validate()?;
        match self {
            WorkloadSpec::Zipf { messages, seed, .. }
            | WorkloadSpec::Lognormal { messages, seed, .. }
            | WorkloadSpec::Uniform { messages, seed, .. } => {
                let dist = self.distribution()?.expect("synthetic workload");
                Ok(sample_stream(&dist, *messages, *seed))
            }
            WorkloadSpec::Trace { path, messages } => {
                let mut s = trace_stream(path)?;
                if let Some(m) = messages {
                    s.truncate(*m as usize);
                }
                Ok(s)
            }
            WorkloadSpec::GraphEdges { path, messages } => {
                let mut s = graph_edge_stream(path)?;
                if let Some(m) = messages {
                    s.truncate(*m as usize);
                    s.key_count = s.keys.iter().collect::<HashSet<_>>().len();
                }
                Ok(s)
            }
        }
    }

    /// Short human-readable identifier used in result tables.
    pub fn label(&self) -> String {
        match self {
            WorkloadSpec::Zipf { keys, z, .. } => format!("zipf(k={keys},z={z})"),
            WorkloadSpec::Lognormal {
                keys, mu, sigma, ..
            } => format!("lognormal(k={keys},mu={mu},sigma={sigma})"),
            WorkloadSpec::Uniform { keys, .. } => format!("uniform(k={keys})"),
            WorkloadSpec::Trace { path, .. } => format!("trace({})", path.display()),
            WorkloadSpec::GraphEdges { path, .. } => format!("graph({})", path.display()),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            WorkloadSpec::Zipf { seed, .. }
            | WorkloadSpec::Lognormal { seed, .. }
            | WorkloadSpec::Uniform { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// Same workload with a different generator seed (no-op for files).
    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut w = self.clone();
        match &mut w {
            WorkloadSpec::Zipf { seed, .. }
            | WorkloadSpec::Lognormal { seed, .. }
            | WorkloadSpec::Uniform { seed, .. } => *seed = new_seed,
            _ => {}
        }
        w
    }

    pub fn messages(&self) -> Option<u64> {
        match self {
            WorkloadSpec::Zipf { messages, .. }
            | WorkloadSpec::Lognormal { messages, .. }
            | WorkloadSpec::Uniform { messages, .. } => Some(*messages),
            WorkloadSpec::Trace { messages, .. } | WorkloadSpec::GraphEdges { messages, .. } => {
                *messages
            }
        }
    }
}
