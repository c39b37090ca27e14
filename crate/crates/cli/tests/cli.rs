use std::path::Path;
use std::process::{Command, Output};

fn pkgsim(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pkgsim"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn printed(o: &Output, name: &str) -> f64 {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{name} = ")).map(|v| v.parse().unwrap()))
        .unwrap_or_else(|| panic!("{name} not printed: {}", stdout(o)))
}

#[test]
fn shuffle_round_robin_divisible_case() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["simulate", "--strategy", "sg", "--workers", "4", "--sources", "1", "--zipf-z", "0", "--keys", "100", "--messages", "400", "--seed", "1"];
    // sampled every message the cycle 0.75, 0.5, 0.25, 0 averages to 0.375
    let o = pkgsim(dir.path(), &base);
    assert!(o.status.success());
    assert_eq!(printed(&o, "fraction_avg_imbalance"), 0.375 / 400.0);
    assert_eq!(printed(&o, "final_imbalance"), 0.0);
    // sampled on the round boundary every sample is perfectly balanced
    let mut args = base.to_vec();
    args.extend(["--sample-interval", "4"]);
    let o = pkgsim(dir.path(), &args);
    assert_eq!(printed(&o, "fraction_avg_imbalance"), 0.0);
}

#[test]
fn key_grouping_single_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = pkgsim(dir.path(), &["simulate", "--strategy", "kg", "--workers", "4", "--keys", "1", "--messages", "100", "--seed", "1"]);
    assert!(o.status.success());
    assert_eq!(printed(&o, "final_imbalance"), 75.0);
    let csv = std::fs::read_to_string(dir.path().join("imbalance.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert_eq!(lines.next().unwrap(), "t,imbalance,max_load,avg_load");
    assert_eq!(lines.count(), 100);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 1);
    assert_eq!(summary["final_imbalance"], 75.0);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["simulate", "--strategy", "pkg-local", "--workers", "5", "--sources", "3", "--zipf-z", "1.1", "--keys", "500", "--messages", "20000", "--seed", "9", "--log-decisions"];
    assert!(pkgsim(a.path(), &args).status.success());
    assert!(pkgsim(b.path(), &args).status.success());
    for f in ["imbalance.csv", "summary.json", "decisions.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "[simulation]\nsources = 2\nworkers = 4\nchoices = 2\nstrategy = \"pkg-local\"\nseed = 3\n\n\
         [workload]\nkind = \"zipf\"\nkeys = 100\nz = 1.0\nmessages = 1000\nseed = 3\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = pkgsim(dir.path(), &["simulate", "--config", cfg, "--workers", "1", "--choices", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(printed(&o, "final_imbalance"), 0.0);

    std::fs::write(dir.path().join("bad.toml"), "[simulation]\nworkers = 4\nextra = 1\n").unwrap();
    let o = pkgsim(dir.path(), &["simulate", "--config", dir.path().join("bad.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // invalid configuration
    let o = pkgsim(dir.path(), &["simulate", "--strategy", "pkg-local", "--workers", "2", "--choices", "3", "--keys", "5", "--messages", "5"]);
    assert_eq!(o.status.code(), Some(2));
    // probe period on a strategy that does not probe
    let o = pkgsim(dir.path(), &["simulate", "--strategy", "kg", "--workers", "2", "--probe-period", "3", "--keys", "5", "--messages", "5"]);
    assert_eq!(o.status.code(), Some(2));
    // missing input file
    let o = pkgsim(dir.path(), &["simulate", "--strategy", "kg", "--workers", "2", "--trace", "/nonexistent/trace.txt"]);
    assert_eq!(o.status.code(), Some(3));
    // unwritable output directory
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = pkgsim(&blocker.join("sub"), &["simulate", "--strategy", "kg", "--workers", "2", "--keys", "5", "--messages", "5"]);
    assert_eq!(o.status.code(), Some(3));
    // usage
    let o = pkgsim(dir.path(), &["simulate", "--bogus-flag"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = pkgsim(dir.path(), &["verify", "mu1", "--n", "10", "--bsize", "10", "--trials", "100"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verdict: pass"));
    let o = pkgsim(dir.path(), &["verify", "mu-d-subsets", "--n", "24", "--mode", "exhaustive"]);
    assert_eq!(o.status.code(), Some(2));
    let o = pkgsim(dir.path(), &["verify", "mu-d-subsets", "--n", "20", "--d", "2", "--keys", "100", "--trials", "50"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = pkgsim(dir.path(), &["verify", "expander-equiv", "--instances", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let o = pkgsim(dir.path(), &["verify", "scaling", "--d", "1", "--ns", "8,16,32,64", "--seeds", "20"]);
    let passed = stdout(&o).contains("verdict = PASS-d1");
    assert!(passed || stdout(&o).contains("verdict = FAIL"));
    assert_eq!(o.status.code(), Some(if passed { 0 } else { 1 }));
    let o = pkgsim(dir.path(), &["verify", "scaling", "--d", "2", "--ns", "8,16", "--seeds", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(dir.path().join("verify_scaling.csv").exists());
}

const GRID: &str = r#"
[sweep]
strategies = ["pkg-local", "kg"]
sources = [5]
workers = [5]
choices = [2]
seeds = [1, 2, 3]

[[sweep.workloads]]
kind = "zipf"
keys = 1000
z = 0.5
messages = 20000
seed = 0

[[sweep.workloads]]
kind = "trace"
path = "/nonexistent/trace.txt"
"#;

#[test]
fn sweep_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.toml");
    std::fs::write(&cfg, GRID).unwrap();
    let out_seq = dir.path().join("seq");
    let out_par = dir.path().join("par");
    let cfg = cfg.to_str().unwrap();
    assert!(pkgsim(&out_seq, &["sweep", "--config", cfg]).status.success());
    assert!(pkgsim(&out_par, &["sweep", "--config", cfg, "--parallel", "4"]).status.success());
    let rows = std::fs::read_to_string(out_seq.join("sweep_rows.csv")).unwrap();
    assert_eq!(rows, std::fs::read_to_string(out_par.join("sweep_rows.csv")).unwrap());
    let mut lines = rows.lines();
    assert!(lines.next().unwrap().starts_with("# config:"));
    assert!(lines.next().unwrap().ends_with(",error"));
    let data: Vec<&str> = lines.collect();
    assert_eq!(data.len(), 12);
    assert_eq!(data.iter().filter(|l| l.contains("nonexistent")).count(), 6);

    let o = pkgsim(&out_seq, &["report", out_seq.join("sweep_rows.csv").to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(
        std::fs::read_to_string(out_seq.join("report_aggregate.csv")).unwrap().lines().skip(1).collect::<Vec<_>>(),
        std::fs::read_to_string(out_seq.join("sweep_aggregate.csv")).unwrap().lines().skip(1).collect::<Vec<_>>(),
    );
}

#[test]
fn single_point_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("one.toml");
    std::fs::write(
        &cfg,
        "[sweep]\nstrategies = [\"sg\"]\nsources = [1]\nworkers = [2]\nchoices = [1]\nseeds = [4]\n\
         [[sweep.workloads]]\nkind = \"uniform\"\nkeys = 10\nmessages = 100\nseed = 0\n",
    )
    .unwrap();
    assert!(pkgsim(dir.path(), &["sweep", "--config", cfg.to_str().unwrap()]).status.success());
    let rows = std::fs::read_to_string(dir.path().join("sweep_rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
}

#[test]
fn disagreement_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = pkgsim(dir.path(), &["disagreement", "--zipf-z", "0.4", "--sources", "1,5", "--messages", "50000", "--keys", "1000"]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("disagreement.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    // the quoted workload label contains commas, so count from the end
    let pct = |row: &str| row.rsplit(',').nth(3).unwrap().parse::<f64>().unwrap();
    assert_eq!(pct(rows[0]), 0.0);
    assert!(pct(rows[1]) > 0.0);
    let o = pkgsim(dir.path(), &["disagreement", "--workers", "1", "--choices", "1", "--messages", "5000", "--keys", "100"]);
    assert!(o.status.success());
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pkgsim"))
        .env("PKG_OUT_DIR", dir.path())
        .args(["simulate", "--strategy", "sg", "--workers", "2", "--keys", "3", "--messages", "10"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("summary.json").exists());
}
