//! Weak-measurement estimation and detection.
//!
//! A system `A` is weakly coupled to a Gaussian meter `B` with strength `x`,
//! the system is measured in a chosen basis, and the meter reading carries
//! additional correlated technical noise. This crate provides the pieces
//! needed to compare estimators and detection statistics in that model:
//!
//! * [`quantum`]: observables, states, weak values and joint sampling of
//!   (outcome, meter position) pairs in the first-order model.
//! * [`noise`]: covariance builders, correlated Gaussian sampling and the
//!   sample-covariance calibration estimator.
//! * [`estimators`]: maximum likelihood, simplified (covariance-free) and
//!   post-selected weak-value-amplification estimators with their variances.
//! * [`detection`]: the likelihood-ratio statistic, its expectations and a
//!   chi-square decision rule.
//! * [`fisher`]: quantum Fisher information of the joint and post-selected
//!   states on finite-dimensional `A ⊗ B`, plus the Chernoff tail bound.

pub mod detection;
pub mod error;
pub mod estimators;
pub mod fisher;
pub mod noise;
pub mod quantum;
pub mod random;
pub mod stats;

pub use error::{Error, Result};

/// Complex scalar used for amplitudes and operators.
pub type C64 = nalgebra::Complex<f64>;
