//! Experiment documents (TOML) and their merge with command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pkg_core::simulator::SweepGrid;
use pkg_core::workloads::WorkloadSpec;
use pkg_core::SimConfig;

use crate::error::{CliError, CliResult};

/// Top-level experiment document. Every table is optional; each subcommand
/// reads the ones it needs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub simulation: Option<SimConfig>,
    #[serde(default)]
    pub workload: Option<WorkloadSpec>,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
    #[serde(default)]
    pub disagreement: Option<DisagreementStudy>,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

/// Disagreement between local and oracle estimation over a grid of skews
/// and source counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisagreementStudy {
    pub zipf_z: Vec<f64>,
    pub sources: Vec<usize>,
    pub keys: usize,
    pub messages: u64,
    pub workers: usize,
    #[serde(default = "default_choices")]
    pub choices: usize,
    pub seed: u64,
}

fn default_choices() -> usize {
    2
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(ExperimentConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

/// Resolution order for the output directory: flag, `PKG_OUT_DIR`, config
/// file, then `out`.
pub fn output_dir(flag: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output.as_ref().map(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let err = toml::from_str::<ExperimentConfig>("[simulation]\nsources = 1\nworkers = 2\nchoices = 1\nstrategy = \"sg\"\nseed = 1\nbogus = 3\n");
        assert!(err.is_err());
        let err = toml::from_str::<ExperimentConfig>("[nonsense]\n");
        assert!(err.is_err());
    }

    #[test]
    fn full_document_parses() {
        let doc = r#"
            [simulation]
            sources = 5
            workers = 10
            choices = 2
            strategy = "pkg-probe"
            seed = 7
            probe_period = 1000

            [workload]
            kind = "lognormal"
            keys = 16000
            mu = 1.789
            sigma = 2.366
            messages = 100000
            seed = 7

            [output]
            dir = "results"
        "#;
        let c: ExperimentConfig = toml::from_str(doc).unwrap();
        assert_eq!(c.simulation.unwrap().probe_period, Some(1000));
        assert!(matches!(c.workload, Some(WorkloadSpec::Lognormal { .. })));
        assert_eq!(output_dir(None, &ExperimentConfig::default()), PathBuf::from("out"));
    }

    #[test]
    fn shipped_configs_parse() {
        let load = |text: &str| toml::from_str::<ExperimentConfig>(text).unwrap();
        let skew = load(include_str!("../../../configs/skew_sweep.toml")).sweep.unwrap();
        assert_eq!(skew.points() / skew.seeds.len(), 80);
        let d = load(include_str!("../../../configs/dchoices_sweep.toml")).sweep.unwrap();
        assert_eq!(d.choices, (2..=10).collect::<Vec<_>>());
        assert!(load(include_str!("../../../configs/strategies.toml")).sweep.is_some());
        let sim = load(include_str!("../../../configs/simulate_ln1_probe.toml"));
        sim.simulation.unwrap().validate().unwrap();
        assert!(load(include_str!("../../../configs/disagreement.toml")).disagreement.is_some());
    }
}
