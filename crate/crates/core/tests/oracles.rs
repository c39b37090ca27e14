//! Simulator results cross-checked against independent straight-line
//! computations, plus the run-to-measure examples.

use pkg_core::config::Strategy;
use pkg_core::hashing::HashFamily;
use pkg_core::simulator::{aggregate, family_for, measure_disagreement, run, run_stream, sweep, SweepGrid};
use pkg_core::workloads::{lognormal_probs, lognormal_rounded_probs, zipf_probs, WorkloadSpec};
use pkg_core::SimConfig;

/// Greedy-2 on true loads with its own bookkeeping: returns the
/// time-averaged `max - mean` sampled every `stride` messages, over `m`.
fn straight_loop_greedy2(keys: &[u64], fam: &HashFamily, stride: usize) -> f64 {
    let workers = fam.n();
    let mut loads = vec![0i64; workers];
    let mut acc = 0.0;
    let mut samples = 0usize;
    for (i, &k) in keys.iter().enumerate() {
        let (a, b) = (fam.choice(0, k), fam.choice(1, k));
        let pick = if loads[b] < loads[a] || (loads[b] == loads[a] && b < a) { b } else { a };
        loads[pick] += 1;
        let t = i + 1;
        if t % stride == 0 {
            let max = *loads.iter().max().unwrap() as f64;
            acc += max - t as f64 / workers as f64;
            samples += 1;
        }
    }
    acc / samples as f64 / keys.len() as f64
}

#[test]
fn low_skew_pkg_matches_straight_loop() {
    let workload = WorkloadSpec::Zipf { keys: 1000, z: 0.1, messages: 100_000, seed: 17 };
    let stream = workload.materialize().unwrap();
    let config = SimConfig::new(Strategy::PkgLocal, 1, 5, 2, 17);
    let oracle = straight_loop_greedy2(&stream.keys, &family_for(&config).unwrap(), 100);
    for strategy in [Strategy::PkgLocal, Strategy::PkgGlobal] {
        let r = run_stream(&SimConfig { strategy, ..config.clone() }, &stream).unwrap();
        assert!((r.fraction_avg_imbalance - oracle).abs() < 1e-15, "{strategy}: {} vs {oracle}", r.fraction_avg_imbalance);
        assert!(r.fraction_avg_imbalance < 1e-4);
    }
    let five = run_stream(&SimConfig::new(Strategy::PkgLocal, 5, 5, 2, 17), &stream).unwrap();
    assert!(five.fraction_avg_imbalance < 1e-4);
}

#[test]
fn two_round_robin_sources() {
    // each source sends 9 messages; with shuffle grouping per source, 3 per worker each
    let stream = pkg_core::workloads::Stream::new((0..18).collect(), 18);
    let r = run_stream(&SimConfig::new(Strategy::Sg, 2, 3, 1, 0), &stream).unwrap();
    assert_eq!(r.final_loads.as_slice(), &[6, 6, 6]);
    assert!(r.source_loads.iter().all(|l| l.as_slice() == [3, 3, 3]));
}

#[test]
fn zipf_three_keys_exact() {
    let p = zipf_probs::<f64>(3, 2.0).unwrap();
    let expected = [36.0 / 49.0, 9.0 / 49.0, 4.0 / 49.0];
    for (a, b) in p.probs().iter().zip(expected) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn ln1_top_key_is_heavy() {
    // one weight per key: the top share varies with the draw, but stays
    // within an order of magnitude of 0.1471
    for seed in 0..20 {
        let p1 = lognormal_probs(16_000, 1.789, 2.366, seed).unwrap().p1();
        assert!((0.01471..=1.0).contains(&p1), "seed {seed}: p1 = {p1}");
    }
    let rounded = lognormal_rounded_probs(16_000, 1.789, 2.366).unwrap().p1();
    assert!(rounded > 0.05 && (rounded - 0.1471).abs() < 0.002);
}

fn zipf_grid(zs: &[f64], workers: Vec<usize>, choices: Vec<usize>, m: u64) -> SweepGrid {
    SweepGrid {
        workloads: zs.iter().map(|&z| WorkloadSpec::Zipf { keys: 10_000, z, messages: m, seed: 0 }).collect(),
        strategies: vec![Strategy::PkgLocal],
        sources: vec![5],
        workers,
        choices,
        seeds: vec![1, 2, 3],
        probe_period: None,
        sample_interval: None,
    }
}

#[test]
fn skew_sweep_separates_low_and_high() {
    let rows = sweep(&zipf_grid(&[0.5, 2.0], vec![5], vec![2], 1_000_000), true);
    assert!(rows.iter().all(|r| r.is_ok()));
    let agg = aggregate(&rows);
    let at = |label: &str| agg.iter().find(|a| a.workload.contains(label)).unwrap().median.unwrap();
    let (low, high) = (at("z=0.5"), at("z=2"));
    assert!(high > 10.0 * low, "{high} vs {low}");
}

#[test]
fn more_choices_never_hurt() {
    let rows = sweep(&zipf_grid(&[1.2], vec![10], (2..=10).collect(), 1_000_000), true);
    let mut agg = aggregate(&rows);
    agg.sort_by_key(|a| a.choices);
    let medians: Vec<f64> = agg.iter().map(|a| a.median.unwrap()).collect();
    assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{medians:?}");
}

#[test]
fn disagreement_with_balance() {
    let w = |seed| WorkloadSpec::Zipf { keys: 10_000, z: 0.5, messages: 1_000_000, seed };
    let d = measure_disagreement(&SimConfig::new(Strategy::PkgLocal, 5, 5, 2, 6), &w(6)).unwrap();
    assert!(d.percent_disagree > 0.0 && d.balance_ratio <= 10.0, "{d:?}");
    for s in [2, 5, 10, 15] {
        let w = WorkloadSpec::Zipf { keys: 10_000, z: 0.4, messages: 1_000_000, seed: 8 };
        let d = measure_disagreement(&SimConfig::new(Strategy::PkgLocal, s, 5, 2, 8), &w).unwrap();
        assert!(d.percent_disagree > 0.0 && d.balance_ratio <= 10.0, "S={s}: {d:?}");
    }
}

#[test]
fn single_key_kg_imbalance() {
    let w = WorkloadSpec::Uniform { keys: 1, messages: 100, seed: 1 };
    let r = run(&SimConfig::new(Strategy::Kg, 1, 4, 1, 1), &w).unwrap();
    assert_eq!(r.final_imbalance(), 75.0);
}
