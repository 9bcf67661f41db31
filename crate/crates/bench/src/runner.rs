//! Monte Carlo trials, reduction and sweeps.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use wva_core::detection::{expected_d_with, lr_statistic_with};
use wva_core::estimators::{mle_with, smle_with, wva_with, Dataset, EstimateReport, EstimatorKind, ReadingCovariance};
use wva_core::noise::NoiseSampler;
use wva_core::quantum::sample_joint;
use wva_core::stats::{chi2_upper_quantile, Moments};

use crate::config::{ExperimentConfig, Resolved, SweepParam};
use crate::error::BenchError;
use crate::seed::derive_trial_seed;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "WVA_BENCH_THREADS";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker count; `None` uses [`THREADS_ENV`] or the machine default.
    pub threads: Option<usize>,
    /// Keep per-trial records in [`RunResult::trial_records`].
    pub keep_trials: bool,
}

impl RunOptions {
    pub fn with_threads(threads: usize) -> Self {
        Self {
            threads: Some(threads),
            ..Self::default()
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool, BenchError> {
        let threads = self.threads.or_else(threads_from_env).unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| BenchError::Io(std::io::Error::other(e)))
    }
}

/// Parses [`THREADS_ENV`]; unset, empty, zero or malformed values mean no cap.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Everything computed in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub n_check: usize,
    pub mle: f64,
    pub mle_var: f64,
    pub smle: f64,
    pub smle_var: f64,
    /// Absent when no reading was post-selected.
    pub wva: Option<f64>,
    pub wva_var: Option<f64>,
    pub wva_conditional_var: Option<f64>,
    pub d_null: f64,
    pub d_alt: f64,
    pub noncentrality: f64,
    pub reject_null: bool,
    pub reject_alt: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    pub trials_used: usize,
    pub skipped_trials: usize,
    pub emp_mean: f64,
    pub emp_var: f64,
    /// Mean of the per-trial closed-form variance.
    pub analytic_var: f64,
    /// Mean of the per-trial exact conditional variance.
    pub conditional_var: f64,
    pub emp_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub dof: usize,
    pub alpha: f64,
    pub threshold: f64,
    pub mean_d_null: f64,
    pub mean_d_alt: f64,
    pub mean_noncentrality: f64,
    pub reject_rate_null: f64,
    pub reject_rate_alt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub sweep_param: Option<SweepParam>,
    pub sweep_value: Option<f64>,
    pub seed: u64,
    pub trials: usize,
    pub n_per_trial: usize,
    pub x_true: f64,
    pub estimators: Vec<EstimatorSummary>,
    pub detection: DetectionSummary,
    pub mean_n_check: f64,
    /// Fraction of trials with no post-selected reading.
    pub zero_check_fraction: f64,
    pub first_order_warning: bool,
    pub config_hash: String,
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip)]
    pub trial_records: Vec<TrialRecord>,
}

impl RunResult {
    pub fn estimator(&self, kind: EstimatorKind) -> &EstimatorSummary {
        self.estimators
            .iter()
            .find(|s| s.estimator == kind)
            .expect("all estimators are summarized")
    }
}

/// Precomputed per-point state shared by all trials.
struct PointContext {
    resolved: Resolved,
    sampler: NoiseSampler,
    rc: ReadingCovariance,
    threshold: f64,
    dof: usize,
}

impl PointContext {
    fn new(resolved: Resolved) -> Result<Self, BenchError> {
        let sampler = NoiseSampler::new(&resolved.covariance);
        let rc = ReadingCovariance::new(&resolved.covariance, resolved.coupling.sigma())?;
        let dof = resolved.dof.dof(resolved.n_per_trial);
        let threshold = chi2_upper_quantile(dof, resolved.alpha)?;
        Ok(Self {
            resolved,
            sampler,
            rc,
            threshold,
            dof,
        })
    }

    fn trial(&self, index: usize) -> Result<TrialRecord, wva_core::Error> {
        let r = &self.resolved;
        let n = r.n_per_trial;
        let seed = derive_trial_seed(r.seed, index as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let sample = sample_joint(&r.coupling, n, &mut rng)?;
        let readings = DVector::from_vec(sample.meter) + self.sampler.sample(&mut rng);
        let table = r.coupling.outcomes();
        let ow = table.weak_values_for(&sample.outcomes)?;
        let data = Dataset::new(sample.outcomes, readings.as_slice().to_vec(), table.len())?;

        let mle = mle_with(&self.rc, &data, &ow)?;
        let smle = smle_with(&self.rc, &data, &ow)?;
        let n_check = data.count(r.postselect);
        let wva: Option<EstimateReport> = match data.outcomes().iter().position(|&f| f == r.postselect) {
            Some(j) => Some(wva_with(&self.rc, &data, r.postselect, ow[j])?),
            None => None,
        };

        let d_alt = lr_statistic_with(&self.rc, &data, &ow)?;
        let sigma = r.coupling.sigma();
        let null_readings = DVector::from_fn(n, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        }) + self.sampler.sample(&mut rng);
        let d_null = lr_statistic_with(&self.rc, &data.with_readings(null_readings), &ow)?;
        let noncentrality = expected_d_with(&self.rc, r.coupling.x_true(), &ow)?.noncentrality;

        Ok(TrialRecord {
            trial: index,
            seed,
            n_check,
            mle: mle.estimate,
            mle_var: mle.analytic_variance,
            smle: smle.estimate,
            smle_var: smle.analytic_variance,
            wva: wva.map(|w| w.estimate),
            wva_var: wva.map(|w| w.analytic_variance),
            wva_conditional_var: wva.map(|w| w.conditional_variance),
            d_null,
            d_alt,
            noncentrality,
            reject_null: d_null > self.threshold,
            reject_alt: d_alt > self.threshold,
        })
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

fn summarize(
    kind: EstimatorKind,
    x: f64,
    total: usize,
    rows: &[(f64, f64, f64)],
) -> EstimatorSummary {
    let estimates: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let m = Moments::of(&estimates);
    EstimatorSummary {
        estimator: kind,
        trials_used: rows.len(),
        skipped_trials: total - rows.len(),
        emp_mean: m.mean,
        emp_var: m.variance,
        analytic_var: mean(rows.iter().map(|r| r.1)),
        conditional_var: mean(rows.iter().map(|r| r.2)),
        emp_mse: mean(estimates.iter().map(|e| (e - x).powi(2))),
    }
}

/// Reduces trial records, in the order given, into a [`RunResult`].
pub fn aggregate(config: &ExperimentConfig, records: &[TrialRecord]) -> Result<RunResult, BenchError> {
    let resolved = config.resolve()?;
    let ctx = PointContext::new(resolved)?;
    Ok(reduce(config, &ctx, records, Duration::ZERO))
}

fn reduce(config: &ExperimentConfig, ctx: &PointContext, records: &[TrialRecord], wall_time: Duration) -> RunResult {
    let r = &ctx.resolved;
    let x = r.coupling.x_true();
    let total = records.len();
    let mle: Vec<_> = records.iter().map(|t| (t.mle, t.mle_var, t.mle_var)).collect();
    let smle: Vec<_> = records.iter().map(|t| (t.smle, t.smle_var, t.smle_var)).collect();
    let wva: Vec<_> = records
        .iter()
        .filter_map(|t| Some((t.wva?, t.wva_var?, t.wva_conditional_var?)))
        .collect();
    let rate = |f: fn(&TrialRecord) -> bool| records.iter().filter(|t| f(t)).count() as f64 / total as f64;
    RunResult {
        sweep_param: None,
        sweep_value: None,
        seed: r.seed,
        trials: total,
        n_per_trial: r.n_per_trial,
        x_true: x,
        estimators: vec![
            summarize(EstimatorKind::Mle, x, total, &mle),
            summarize(EstimatorKind::Smle, x, total, &smle),
            summarize(EstimatorKind::Wva, x, total, &wva),
        ],
        detection: DetectionSummary {
            dof: ctx.dof,
            alpha: r.alpha,
            threshold: ctx.threshold,
            mean_d_null: mean(records.iter().map(|t| t.d_null)),
            mean_d_alt: mean(records.iter().map(|t| t.d_alt)),
            mean_noncentrality: mean(records.iter().map(|t| t.noncentrality)),
            reject_rate_null: rate(|t| t.reject_null),
            reject_rate_alt: rate(|t| t.reject_alt),
        },
        mean_n_check: mean(records.iter().map(|t| t.n_check as f64)),
        zero_check_fraction: rate(|t| t.n_check == 0),
        first_order_warning: r.coupling.first_order_warning(),
        config_hash: config.hash(),
        wall_time,
        trial_records: Vec::new(),
    }
}

fn run_in_pool(
    pool: &rayon::ThreadPool,
    config: &ExperimentConfig,
    keep_trials: bool,
) -> Result<RunResult, BenchError> {
    let start = Instant::now();
    let ctx = PointContext::new(config.resolve()?)?;
    if ctx.resolved.coupling.first_order_warning() {
        log::warn!(
            "x·|O|/σ = {:.3} exceeds the first-order validity limit",
            ctx.resolved.coupling.weak_regime_ratio()
        );
    }
    let outcomes: Vec<Result<TrialRecord, wva_core::Error>> =
        pool.install(|| (0..ctx.resolved.trials).into_par_iter().map(|i| ctx.trial(i)).collect());
    let mut records = Vec::with_capacity(outcomes.len());
    for (index, outcome) in outcomes.into_iter().enumerate() {
        records.push(outcome.map_err(|source| BenchError::Trial { index, source })?);
    }
    let mut result = reduce(config, &ctx, &records, start.elapsed());
    let skipped = result.estimator(EstimatorKind::Wva).skipped_trials;
    if skipped > 0 {
        log::info!("wva skipped in {skipped} of {} trials (no post-selected readings)", result.trials);
    }
    if keep_trials {
        result.trial_records = records;
    }
    Ok(result)
}

/// Runs all trials of one configuration. The result does not depend on the
/// worker count.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunResult, BenchError> {
    run_in_pool(&opts.pool()?, config, opts.keep_trials)
}

/// Seed for sweep point `index`.
pub fn point_seed(master: u64, index: usize) -> u64 {
    derive_trial_seed(!master, index as u64)
}

/// One [`RunResult`] per value of `[sweep]`, in list order.
pub fn sweep(config: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<RunResult>, BenchError> {
    let (param, values) = config.sweep_points()?;
    let pool = opts.pool()?;
    values
        .iter()
        .enumerate()
        .map(|(k, &value)| {
            let mut point = config.at_point(param, value)?;
            point.run.seed = point_seed(config.run.seed, k);
            let mut result = run_in_pool(&pool, &point, opts.keep_trials)?;
            result.sweep_param = Some(param);
            result.sweep_value = Some(value);
            Ok(result)
        })
        .collect()
}
