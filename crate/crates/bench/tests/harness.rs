use std::collections::HashSet;
use std::path::PathBuf;

use oracle::{binomial_pmf, moments};
use wva_bench::config::{ExperimentConfig, SweepParam, SweepSection};
use wva_bench::output::{csv_string, read_trial_dump, dump_trials, Rows};
use wva_bench::runner::{aggregate, point_seed, run_experiment, sweep, RunOptions};
use wva_bench::{derive_trial_seed, BenchError};
use wva_core::estimators::EstimatorKind;

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_path(&config_path(name)).unwrap()
}

/// Reference formulas written out independently of the crates under test.
mod oracle {
    pub fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
        let mut log_c = 0.0;
        for j in 0..k {
            log_c += ((n - j) as f64).ln() - ((j + 1) as f64).ln();
        }
        (log_c + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
    }

    /// Mean and standard error.
    pub fn moments(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }
}

#[test]
fn derived_seeds_do_not_collide() {
    let seeds: HashSet<u64> = (0..1_000_000).map(|i| derive_trial_seed(0xDEAD_BEEF, i)).collect();
    assert_eq!(seeds.len(), 1_000_000);
    assert_ne!(point_seed(1, 0), point_seed(2, 0));
}

#[test]
fn null_case_estimators_centered() {
    let mut c = load("desk.toml");
    c.run.x_true = 0.0;
    c.meter.sigma = 1.0;
    c.noise.kind = "white".into();
    c.noise.params = vec![0.0];
    c.run.trials = 10_000;
    c.run.n_per_trial = 20;
    let r = run_experiment(&c, &RunOptions { keep_trials: true, ..Default::default() }).unwrap();
    let pick: [(EstimatorKind, fn(&wva_bench::runner::TrialRecord) -> Option<f64>); 3] = [
        (EstimatorKind::Mle, |t| Some(t.mle)),
        (EstimatorKind::Smle, |t| Some(t.smle)),
        (EstimatorKind::Wva, |t| t.wva),
    ];
    for (kind, get) in pick {
        let v: Vec<f64> = r.trial_records.iter().filter_map(get).collect();
        let (mean, se) = moments(&v);
        assert!(mean.abs() < 4.0 * se, "{kind}: {mean} (se {se})");
        assert_eq!(mean, r.estimator(kind).emp_mean);
    }
}

#[test]
fn repeated_runs_serialize_identically() {
    let mut c = load("desk.toml");
    c.run.trials = 500;
    let a = run_experiment(&c, &RunOptions::with_threads(1)).unwrap();
    let b = run_experiment(&c, &RunOptions::with_threads(3)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn csv_identical_across_worker_counts() {
    let c = load("golden.toml");
    let texts: Vec<String> = [1, 2, 8]
        .iter()
        .map(|&t| csv_string(&sweep(&c, &RunOptions::with_threads(t)).unwrap(), Rows::All))
        .collect();
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0], texts[2]);
}

#[test]
fn row_count_contract() {
    let c = load("golden.toml");
    let results = sweep(&c, &RunOptions::default()).unwrap();
    assert_eq!(results.len(), 2);
    let csv = csv_string(&results, Rows::All);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 6 + 2);
    assert_eq!(lines.iter().filter(|l| l.contains(",detect,")).count(), 2);
    assert!(!csv.contains('\r'));
    for line in &lines {
        assert_eq!(line.split(',').count(), 13);
    }
    assert_eq!(results[0].sweep_value, Some(0.0));
    assert_eq!(results[1].sweep_value, Some(0.1));
}

#[test]
fn empty_sweep_is_a_config_error() {
    let mut c = load("golden.toml");
    c.sweep = Some(SweepSection {
        param: SweepParam::Sigma,
        values: vec![],
    });
    match sweep(&c, &RunOptions::default()) {
        Err(BenchError::Config(e)) => assert_eq!(e.path, "sweep.values"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn aggregates_recomputed_from_dump() {
    let c = load("golden.toml");
    let results = sweep(&c, &RunOptions { keep_trials: true, ..Default::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trials.jsonl");
    dump_trials(&results, &path).unwrap();
    let points = read_trial_dump(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(points.len(), results.len());
    let (param, values) = c.sweep_points().unwrap();
    for (k, (records, original)) in points.iter().zip(&results).enumerate() {
        let mut point = c.at_point(param, values[k]).unwrap();
        point.run.seed = point_seed(c.run.seed, k);
        let again = aggregate(&point, records).unwrap();
        for kind in EstimatorKind::ALL {
            let (a, b) = (again.estimator(kind), original.estimator(kind));
            for (x, y) in [
                (a.emp_mean, b.emp_mean),
                (a.emp_var, b.emp_var),
                (a.analytic_var, b.analytic_var),
                (a.emp_mse, b.emp_mse),
            ] {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
        assert!((again.detection.mean_d_alt - original.detection.mean_d_alt).abs() < 1e-12);
        assert_eq!(again.config_hash, original.config_hash);
    }
}

#[test]
fn skipped_trials_accounted() {
    let c = load("golden.toml");
    for r in sweep(&c, &RunOptions::default()).unwrap() {
        for s in &r.estimators {
            assert_eq!(s.trials_used + s.skipped_trials, r.trials);
        }
        assert_eq!(r.estimator(EstimatorKind::Mle).skipped_trials, 0);
        let wva = r.estimator(EstimatorKind::Wva);
        assert!(wva.skipped_trials > 0);
        assert!((wva.skipped_trials as f64 / r.trials as f64 - r.zero_check_fraction).abs() < 1e-15);
    }
}

/// Mean squared error of WVA over trials with at least one post-selected
/// reading, for `O = σ_z`, `|i> = cos θ|0> + sin θ|1>`, post-selection on `|->`
/// and constant noise `c·11ᵀ`: given `k` retained readings it is
/// `σ²/(k w²) + c/w²`.
fn retained_wva_mse(theta: f64, n: usize, sigma: f64, c: f64) -> (f64, f64, f64) {
    let (co, si) = (theta.cos(), theta.sin());
    let p = (co - si).powi(2) / 2.0;
    let w = (co + si) / (co - si);
    let p0 = binomial_pmf(n, 0, p);
    let mse: f64 = (1..=n)
        .map(|k| binomial_pmf(n, k, p) * (sigma * sigma / (k as f64 * w * w) + c / (w * w)))
        .sum::<f64>()
        / (1.0 - p0);
    (mse, n as f64 * p, w)
}

#[test]
fn theta_sweep_matches_exact_oracle() {
    let c = load("theta_sweep.toml");
    let results = sweep(&c, &RunOptions { keep_trials: true, ..Default::default() }).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for r in &results {
        let theta = r.sweep_value.unwrap();
        let (mse, mean_check, w) = retained_wva_mse(theta, 100, 10.0, 0.01);
        let sq: Vec<f64> = r
            .trial_records
            .iter()
            .filter_map(|t| t.wva)
            .map(|e| (e - 0.1).powi(2))
            .collect();
        let (emp, se) = moments(&sq);
        assert_eq!(emp, r.estimator(EstimatorKind::Wva).emp_mse);
        assert!((emp - mse).abs() < 4.0 * se, "theta {theta}: {emp} vs {mse} (se {se})");

        let n_check: Vec<f64> = r.trial_records.iter().map(|t| t.n_check as f64).collect();
        let (m, se) = moments(&n_check);
        assert!((m - mean_check).abs() < 4.0 * se);
        if let Some((prev_check, prev_w)) = prev {
            assert!(r.mean_n_check < prev_check);
            assert!(w > prev_w);
        }
        prev = Some((r.mean_n_check, w));
    }
}

#[test]
fn sigma_sweep_gap_shrinks() {
    let c = load("sigma_sweep.toml");
    let results = sweep(&c, &RunOptions::default()).unwrap();
    let gaps: Vec<f64> = results
        .iter()
        .map(|r| {
            let m = r.estimator(EstimatorKind::Mle).analytic_var;
            let s = r.estimator(EstimatorKind::Smle).analytic_var;
            (s - m) / m
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps.iter().all(|&g| g >= 0.0));
    assert!(*gaps.last().unwrap() < 1e-3);
}
