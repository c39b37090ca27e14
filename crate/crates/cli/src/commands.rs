use serde::Serialize;

use pkg_core::config::KeyTracking;
use pkg_core::simulator::{aggregate, measure_disagreement, run, sweep, SimResult, SweepRow};
use pkg_core::theory::{
    check_expander_equivalence, fit_imbalance_scaling, run_scaling, verify_mu1, verify_mu_d_subsets,
    MeasureReport, SubsetMode,
};
use pkg_core::workloads::{zipf_probs, LognormalConstruction, WorkloadSpec};
use pkg_core::{KeyDistribution, SimConfig, Strategy};

use crate::config::{output_dir, DisagreementStudy, ExperimentConfig};
use crate::error::{CliError, CliResult, EXIT_FAIL, EXIT_OK};
use crate::output::{read_csv, OutDir};
use crate::{Cli, Command, DisagreementArgs, ReportArgs, SimulateArgs, SweepArgs, VerifyCommand, WorkloadFlags};

pub fn dispatch(cli: Cli) -> CliResult<u8> {
    let out = cli.out_dir;
    match cli.command {
        Command::Simulate(args) => simulate(args, out),
        Command::Sweep(args) => run_sweep(args, out),
        Command::Verify(check) => verify(check, out),
        Command::Disagreement(args) => disagreement(args, out),
        Command::Report(args) => report(args, out),
    }
}

fn uses_choices(strategy: Strategy) -> bool {
    strategy.is_pkg() || strategy == Strategy::PotcStatic
}

fn resolve_sim(file: Option<SimConfig>, args: &SimulateArgs) -> CliResult<SimConfig> {
    let f = &args.sim;
    let mut c = match file {
        Some(c) => c,
        None => {
            let strategy = f.strategy.ok_or_else(|| CliError::usage("--strategy is required without a config file"))?;
            let workers = f.workers.ok_or_else(|| CliError::usage("--workers is required without a config file"))?;
            let choices = if uses_choices(strategy) { workers.min(2) } else { 1 };
            SimConfig::new(strategy, 1, workers, choices, 0)
        }
    };
    if let Some(s) = f.strategy {
        c.strategy = s;
    }
    if let Some(w) = f.workers {
        c.workers = w;
    }
    if let Some(s) = f.sources {
        c.sources = s;
    }
    if let Some(d) = f.choices {
        c.choices = d;
    }
    if let Some(s) = f.seed {
        c.seed = s;
    }
    if f.probe_period.is_some() {
        c.probe_period = f.probe_period;
    }
    if let Some(p) = f.probe_phase {
        c.probe_phase = p;
    }
    if f.sample_interval.is_some() {
        c.sample_interval = f.sample_interval;
    }
    if f.dispatch.is_some() {
        c.dispatch = f.dispatch;
    }
    if let Some(t) = f.tie_break() {
        c.tie_break = t;
    }
    c.log_decisions |= f.log_decisions;
    if c.key_tracking == KeyTracking::Off {
        c.key_tracking = KeyTracking::MaxSetSize;
    }
    c.validate()?;
    Ok(c)
}

fn resolve_workload(file: Option<WorkloadSpec>, w: &WorkloadFlags, seed: u64) -> CliResult<WorkloadSpec> {
    let wseed = w.workload_seed.unwrap_or(seed);
    let need = |v: Option<usize>, what: &str| v.ok_or_else(|| CliError::usage(format!("--{what} is required")));
    let need_m = || w.messages.ok_or_else(|| CliError::usage("--messages is required"));
    let spec = if let Some(path) = &w.trace {
        WorkloadSpec::Trace { path: path.clone(), messages: w.messages }
    } else if let Some(path) = &w.graph {
        WorkloadSpec::GraphEdges { path: path.clone(), messages: w.messages }
    } else if let (Some(mu), Some(sigma)) = (w.lognormal_mu, w.lognormal_sigma) {
        WorkloadSpec::Lognormal {
            keys: need(w.keys, "keys")?,
            mu,
            sigma,
            messages: need_m()?,
            seed: wseed,
            construction: LognormalConstruction::default(),
        }
    } else if let Some(z) = w.zipf_z {
        WorkloadSpec::Zipf { keys: need(w.keys, "keys")?, z, messages: need_m()?, seed: wseed }
    } else if let Some(mut spec) = file {
        override_workload(&mut spec, w);
        spec
    } else {
        WorkloadSpec::Uniform { keys: need(w.keys, "keys")?, messages: need_m()?, seed: wseed }
    };
    spec.validate()?;
    Ok(spec)
}

fn override_workload(spec: &mut WorkloadSpec, w: &WorkloadFlags) {
    match spec {
        WorkloadSpec::Zipf { keys, messages, seed, .. }
        | WorkloadSpec::Lognormal { keys, messages, seed, .. }
        | WorkloadSpec::Uniform { keys, messages, seed } => {
            if let Some(k) = w.keys {
                *keys = k;
            }
            if let Some(m) = w.messages {
                *messages = m;
            }
            if let Some(s) = w.workload_seed {
                *seed = s;
            }
        }
        WorkloadSpec::Trace { messages, .. } | WorkloadSpec::GraphEdges { messages, .. } => {
            if w.messages.is_some() {
                *messages = w.messages;
            }
        }
    }
}

#[derive(Serialize)]
struct RunHeader<'a> {
    simulation: &'a SimConfig,
    workload: &'a WorkloadSpec,
}

#[derive(Serialize)]
struct SeriesRow {
    t: u64,
    imbalance: f64,
    max_load: u64,
    avg_load: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    workload: &'a WorkloadSpec,
    workload_label: String,
    p1: Option<f64>,
    final_imbalance: f64,
    #[serde(flatten)]
    result: &'a SimResult,
}

fn simulate(args: SimulateArgs, out: Option<std::path::PathBuf>) -> CliResult<u8> {
    let file = ExperimentConfig::load(args.config.as_deref())?;
    let dir = output_dir(out.as_deref(), &file);
    let config = resolve_sim(file.simulation.clone(), &args)?;
    let workload = resolve_workload(file.workload.clone(), &args.workload, config.seed)?;
    let result = run(&config, &workload)?;

    let out = OutDir::create(dir)?;
    let header = RunHeader { simulation: &config, workload: &workload };
    let mut series: Vec<SeriesRow> = result
        .samples
        .iter()
        .map(|s| SeriesRow { t: s.t, imbalance: s.imbalance, max_load: s.max_load, avg_load: s.avg_load })
        .collect();
    if series.last().map(|s| s.t) != Some(result.final_sample.t) {
        let s = &result.final_sample;
        series.push(SeriesRow { t: s.t, imbalance: s.imbalance, max_load: s.max_load, avg_load: s.avg_load });
    }
    out.csv("imbalance.csv", &header, &series)?;
    if let Some(decisions) = &result.decisions {
        out.csv("decisions.csv", &header, decisions)?;
    }
    let summary = Summary {
        workload: &workload,
        workload_label: workload.label(),
        p1: workload.distribution()?.map(|d| d.p1()),
        final_imbalance: result.final_imbalance(),
        result: &result,
    };
    out.json("summary.json", &summary)?;

    println!("fraction_avg_imbalance = {}", result.fraction_avg_imbalance);
    println!("final_imbalance = {}", result.final_imbalance());
    Ok(EXIT_OK)
}

fn run_sweep(args: SweepArgs, out: Option<std::path::PathBuf>) -> CliResult<u8> {
    let file = ExperimentConfig::load(Some(&args.config))?;
    let grid = file
        .sweep
        .clone()
        .ok_or_else(|| CliError::usage(format!("{}: no [sweep] table", args.config.display())))?;
    for w in &grid.workloads {
        w.validate()?;
    }
    if args.parallel == 0 {
        return Err(CliError::usage("--parallel must be at least 1"));
    }
    let rows = if args.parallel == 1 {
        sweep(&grid, false)
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.parallel)
            .build()
            .map_err(|e| CliError::usage(e.to_string()))?
            .install(|| sweep(&grid, true))
    };
    let agg = aggregate(&rows);
    let out = OutDir::create(output_dir(out.as_deref(), &file))?;
    let rows_path = out.csv("sweep_rows.csv", &grid, &rows)?;
    let agg_path = out.csv("sweep_aggregate.csv", &grid, &agg)?;
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    println!("{} runs ({failed} failed), {} grid points", rows.len(), agg.len());
    println!("rows: {}", rows_path.display());
    println!("aggregate: {}", agg_path.display());
    Ok(EXIT_OK)
}

fn key_distribution(keys: usize, zipf_z: Option<f64>) -> CliResult<KeyDistribution> {
    Ok(match zipf_z {
        Some(z) => zipf_probs(keys, z)?,
        None => KeyDistribution::uniform(keys)?,
    })
}

fn report_rows(out: &OutDir, name: &str, header: &impl Serialize, report: &MeasureReport) -> CliResult<u8> {
    print!("{report}");
    out.csv_with_headers(name, header, &["field", "value"], &report.rows())?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAIL })
}

#[derive(Serialize)]
struct VerifyHeader<'a> {
    check: &'a str,
    #[serde(flatten)]
    params: serde_json::Value,
}

fn verify(check: VerifyCommand, out: Option<std::path::PathBuf>) -> CliResult<u8> {
    let dir = output_dir(out.as_deref(), &ExperimentConfig::default());
    match check {
        VerifyCommand::Mu1 { n, bsize, keys, zipf_z, trials, lambda, seed } => {
            let dist = key_distribution(keys, zipf_z)?;
            let report = verify_mu1(n, bsize, &dist, trials, lambda, seed)?;
            let header = VerifyHeader {
                check: "mu1",
                params: serde_json::json!({ "n": n, "bsize": bsize, "keys": keys, "zipf_z": zipf_z,
                    "trials": trials, "lambda": lambda, "seed": seed }),
            };
            report_rows(&OutDir::create(dir)?, "verify_mu1.csv", &header, &report)
        }
        VerifyCommand::MuDSubsets { n, d, keys, zipf_z, trials, mode, per_size, seed } => {
            let subset_mode = match mode.as_str() {
                "exhaustive" => SubsetMode::Exhaustive,
                "sampled" => SubsetMode::Sampled { per_size },
                other => return Err(CliError::usage(format!("unknown mode `{other}` (exhaustive|sampled)"))),
            };
            let dist = key_distribution(keys, zipf_z)?;
            let report = verify_mu_d_subsets(n, &dist, d, trials, subset_mode, seed)?;
            let header = VerifyHeader {
                check: "mu-d-subsets",
                params: serde_json::json!({ "n": n, "d": d, "keys": keys, "zipf_z": zipf_z,
                    "trials": trials, "mode": mode, "per_size": per_size, "seed": seed }),
            };
            report_rows(&OutDir::create(dir)?, "verify_mu_d_subsets.csv", &header, &report)
        }
        VerifyCommand::Scaling { d, ns, seeds, seed } => {
            let points = run_scaling(d, &ns, seeds, seed, true)?;
            let verdict = fit_imbalance_scaling(&points)?;
            #[derive(Serialize)]
            struct Row {
                n: usize,
                median_ratio: f64,
                normalized: f64,
            }
            let rows: Vec<Row> = verdict
                .ns
                .iter()
                .zip(&verdict.medians)
                .zip(&verdict.normalized)
                .map(|((&n, &median_ratio), &normalized)| Row { n, median_ratio, normalized })
                .collect();
            for r in &rows {
                println!("n = {:>5}  R = {:.6}  normalized = {:.6}", r.n, r.median_ratio, r.normalized);
            }
            println!("spread = {:.4} (gate {})", verdict.spread, pkg_core::theory::SCALING_SPREAD_GATE);
            if let Some(inc) = verdict.increasing {
                println!("increasing = {inc}");
            }
            println!("verdict = {}", verdict.label());
            let header = VerifyHeader {
                check: "scaling",
                params: serde_json::json!({ "d": d, "ns": ns, "seeds": seeds, "seed": seed }),
            };
            OutDir::create(dir)?.csv("verify_scaling.csv", &header, &rows)?;
            Ok(if verdict.passed { EXIT_OK } else { EXIT_FAIL })
        }
        VerifyCommand::ExpanderEquiv { instances, seed } => {
            let report = check_expander_equivalence(instances, seed);
            let fmt = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
            let rows = vec![
                ("instances", report.instances.to_string()),
                ("property_holds", report.property_holds.to_string()),
                ("disagreements", fmt(&report.disagreements)),
                ("min_form_mismatches", fmt(&report.min_form_mismatches)),
                ("verdict", if report.passed() { "pass" } else { "fail" }.to_string()),
            ];
            for (k, v) in &rows {
                println!("{k:>20}: {v}");
            }
            let header = VerifyHeader {
                check: "expander-equiv",
                params: serde_json::json!({ "instances": instances, "seed": seed }),
            };
            OutDir::create(dir)?.csv_with_headers("verify_expander_equiv.csv", &header, &["field", "value"], &rows)?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_FAIL })
        }
    }
}

fn resolve_study(file: Option<DisagreementStudy>, a: &DisagreementArgs) -> DisagreementStudy {
    let mut s = file.unwrap_or(DisagreementStudy {
        zipf_z: vec![0.4],
        sources: vec![5],
        keys: 10_000,
        messages: 1_000_000,
        workers: 5,
        choices: 2,
        seed: 1,
    });
    if !a.zipf_z.is_empty() {
        s.zipf_z = a.zipf_z.clone();
    }
    if !a.sources.is_empty() {
        s.sources = a.sources.clone();
    }
    s.keys = a.keys.unwrap_or(s.keys);
    s.messages = a.messages.unwrap_or(s.messages);
    s.workers = a.workers.unwrap_or(s.workers);
    s.choices = a.choices.unwrap_or(s.choices.min(s.workers));
    s.seed = a.seed.unwrap_or(s.seed);
    s
}

#[derive(Serialize)]
struct DisagreementRow {
    workload: String,
    z: f64,
    sources: usize,
    workers: usize,
    percent_disagree: f64,
    balance_ratio: f64,
    local_imbalance: f64,
    global_imbalance: f64,
}

fn disagreement(args: DisagreementArgs, out: Option<std::path::PathBuf>) -> CliResult<u8> {
    let file = ExperimentConfig::load(args.config.as_deref())?;
    let study = resolve_study(file.disagreement.clone(), &args);
    let mut rows = Vec::new();
    for &z in &study.zipf_z {
        let workload = WorkloadSpec::Zipf { keys: study.keys, z, messages: study.messages, seed: study.seed };
        workload.validate()?;
        for &s in &study.sources {
            let config = SimConfig::new(Strategy::PkgLocal, s, study.workers, study.choices, study.seed);
            config.validate()?;
            let d = measure_disagreement(&config, &workload)?;
            println!(
                "z = {z:<5} S = {s:<3} disagree = {:>7.3}%  balance_ratio = {:.4}",
                d.percent_disagree, d.balance_ratio
            );
            rows.push(DisagreementRow {
                workload: workload.label(),
                z,
                sources: s,
                workers: study.workers,
                percent_disagree: d.percent_disagree,
                balance_ratio: d.balance_ratio,
                local_imbalance: d.local_imbalance,
                global_imbalance: d.global_imbalance,
            });
        }
    }
    OutDir::create(output_dir(out.as_deref(), &file))?.csv("disagreement.csv", &study, &rows)?;
    Ok(EXIT_OK)
}

fn report(args: ReportArgs, out: Option<std::path::PathBuf>) -> CliResult<u8> {
    let mut rows: Vec<SweepRow> = Vec::new();
    for path in &args.inputs {
        rows.extend(read_csv::<SweepRow>(path)?);
    }
    let agg = aggregate(&rows);
    for a in &agg {
        println!(
            "{} {} S={} W={} d={}: median {} over {} runs ({} failed)",
            a.workload,
            a.strategy,
            a.sources,
            a.workers,
            a.choices,
            a.median.map_or_else(|| "-".to_string(), |m| format!("{m:.6e}")),
            a.trials,
            a.failed
        );
    }
    let header = serde_json::json!({ "report_inputs": args.inputs });
    let out = OutDir::create(output_dir(out.as_deref(), &ExperimentConfig::default()))?;
    out.csv(&args.name, &header, &agg)?;
    Ok(EXIT_OK)
}
