mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pkg_core::config::{Dispatch, ProbePhase, Strategy, TieBreak};

#[derive(Debug, Parser)]
#[command(name = "pkgsim", version, about = "Partial key grouping simulator")]
pub struct Cli {
    /// Directory for result files.
    #[arg(long, global = true, env = "PKG_OUT_DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation.
    Simulate(SimulateArgs),
    /// Run a parameter grid.
    Sweep(SweepArgs),
    /// Run a balls-and-bins verification.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Compare local estimation with the global oracle.
    Disagreement(DisagreementArgs),
    /// Re-aggregate existing sweep row files.
    Report(ReportArgs),
}

#[derive(Debug, Args, Default)]
pub struct SimFlags {
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub sources: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Number of hash choices per key.
    #[arg(long, short = 'd')]
    pub choices: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub probe_period: Option<u64>,
    #[arg(long)]
    pub probe_phase: Option<ProbePhase>,
    #[arg(long)]
    pub sample_interval: Option<u64>,
    #[arg(long)]
    pub dispatch: Option<Dispatch>,
    /// Break ties uniformly at random instead of by lowest worker index.
    #[arg(long)]
    pub random_ties: bool,
    /// Write every routing decision to decisions.csv.
    #[arg(long)]
    pub log_decisions: bool,
}

#[derive(Debug, Args, Default)]
pub struct WorkloadFlags {
    /// Zipf exponent (selects a Zipf workload).
    #[arg(long)]
    pub zipf_z: Option<f64>,
    /// Log-normal mu (selects a log-normal workload, with --lognormal-sigma).
    #[arg(long, requires = "lognormal_sigma")]
    pub lognormal_mu: Option<f64>,
    #[arg(long, requires = "lognormal_mu")]
    pub lognormal_sigma: Option<f64>,
    /// Key stream file, one key per line or `timestamp,key`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Edge list `src dst`; src picks the source, dst is the routed key.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub keys: Option<usize>,
    #[arg(long)]
    pub messages: Option<u64>,
    /// Workload generator seed; defaults to the simulation seed.
    #[arg(long)]
    pub workload_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimFlags,
    #[command(flatten)]
    pub workload: WorkloadFlags,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// E[mu_1(B)] = |B|/n and its tail bound.
    Mu1 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        bsize: usize,
        #[arg(long, default_value_t = 1000)]
        keys: usize,
        /// Zipf exponent of the key distribution; uniform when absent.
        #[arg(long)]
        zipf_z: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = std::f64::consts::E)]
        lambda: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Small subsets carry at most their fair share of mu_d.
    MuDSubsets {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 100)]
        keys: usize,
        #[arg(long)]
        zipf_z: Option<f64>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value = "exhaustive")]
        mode: String,
        /// Random subsets per size class in sampled mode.
        #[arg(long, default_value_t = 1000)]
        per_size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Normalized imbalance I(m)/(m/n) across n.
    Scaling {
        #[arg(long)]
        d: usize,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Subset-ratio and neighbourhood-expansion agree on random instances.
    ExpanderEquiv {
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct DisagreementArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub zipf_z: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sources: Vec<usize>,
    #[arg(long)]
    pub keys: Option<usize>,
    #[arg(long)]
    pub messages: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, short = 'd')]
    pub choices: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Row files written by `sweep`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "report_aggregate.csv")]
    pub name: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { error::EXIT_USAGE } else { error::EXIT_OK });
        }
    };
    match commands::dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl SimFlags {
    pub fn tie_break(&self) -> Option<TieBreak> {
        self.random_ties.then_some(TieBreak::Random)
    }
}
