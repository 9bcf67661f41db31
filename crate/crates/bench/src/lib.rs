//! Monte Carlo harness for the weak-measurement estimation model.
//!
//! A TOML [`ExperimentConfig`] describes the system, meter, noise and run
//! sizes. [`run_experiment`] draws independent trials (each seeded by
//! [`derive_trial_seed`]), evaluates the three estimators and the
//! likelihood-ratio statistic, and reduces them in trial order, so results are
//! identical for any worker count.

pub mod config;
pub mod error;
pub mod fisher_run;
pub mod output;
pub mod runner;
pub mod seed;

pub use config::{ExperimentConfig, SweepParam};
pub use error::{BenchError, ConfigError};
pub use output::{emit_results, Format};
pub use runner::{run_experiment, sweep, RunOptions, RunResult};
pub use seed::derive_trial_seed;
