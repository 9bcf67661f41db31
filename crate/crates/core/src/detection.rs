//! Likelihood-ratio detection of a nonzero coupling.
//!
//! For readings `r ~ N(x·O_w, Q⁻¹)` the statistic
//! `D = rᵀQr - (r - x̂·O_w)ᵀQ(r - x̂·O_w)` reduces to the projection
//! `(O_wᵀQr)² / O_wᵀQO_w`. Under the null it is exactly `χ²₁`; under an
//! alternative it is noncentral `χ²₁` with noncentrality `x²·O_wᵀQO_w`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::estimators::{check_information, Dataset, ReadingCovariance};
use crate::noise::NoiseCovariance;
use crate::quantum::{expected_o_squared, Observable, PureState};
use crate::stats::{chi2_test, Decision};
use crate::{Error, Result};

/// Likelihood-ratio statistic `D` for `x = 0` against a free `x`.
pub fn lr_statistic(data: &Dataset, ow: &DVector<f64>, cov: &NoiseCovariance, sigma: f64) -> Result<f64> {
    lr_statistic_with(&ReadingCovariance::new(cov, sigma)?, data, ow)
}

pub fn lr_statistic_with(rc: &ReadingCovariance, data: &Dataset, ow: &DVector<f64>) -> Result<f64> {
    rc.check_len(data.len())?;
    rc.check_len(ow.len())?;
    check_information(ow)?;
    let q_ow = rc.precision_times(ow);
    let projection = q_ow.dot(data.readings());
    Ok(projection * projection / ow.dot(&q_ow))
}

/// Expected value of `D` given the outcome sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedD {
    /// `x²·O_wᵀQO_w`
    pub noncentrality: f64,
    /// `N + x²·O_wᵀQO_w`, the published closed form.
    pub paper_form: f64,
}

pub fn expected_d(x: f64, ow: &DVector<f64>, cov: &NoiseCovariance, sigma: f64) -> Result<ExpectedD> {
    expected_d_with(&ReadingCovariance::new(cov, sigma)?, x, ow)
}

pub fn expected_d_with(rc: &ReadingCovariance, x: f64, ow: &DVector<f64>) -> Result<ExpectedD> {
    rc.check_len(ow.len())?;
    check_information(ow)?;
    let noncentrality = x * x * rc.precision_form(ow, ow);
    Ok(ExpectedD {
        noncentrality,
        paper_form: ow.len() as f64 + noncentrality,
    })
}

/// Noncentrality averaged over outcome sequences, first order in `1/σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedDTotal {
    /// `n·x²·<i|O²|i>/σ²`
    pub noncentrality: f64,
    /// `n·(1 + x²<i|O²|i>/σ²)`
    pub paper_form: f64,
}

pub fn expected_d_total(
    x: f64,
    n: usize,
    initial: &PureState,
    observable: &Observable,
    sigma: f64,
) -> Result<ExpectedDTotal> {
    if !(sigma > 0.0) {
        return Err(Error::BadParams(format!("sigma must be > 0, got {sigma}")));
    }
    let per_trial = x * x * expected_o_squared(initial, observable)? / (sigma * sigma);
    Ok(ExpectedDTotal {
        noncentrality: n as f64 * per_trial,
        paper_form: n as f64 * (1.0 + per_trial),
    })
}

/// Split of the categorical log-likelihood-ratio statistic into kept (`✓`) and
/// discarded (`×`) bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSplit {
    pub d_total: f64,
    pub d_check: f64,
    pub d_cross: f64,
    /// Whether every observed bin satisfies `p_mle ≥ p_null`. Only then is
    /// each bin's contribution, and so `d_cross`, guaranteed nonnegative.
    pub bins_dominated: bool,
}

/// `D = 2 Σ_k n_k log(p_mle,k / p_null,k)`, split by membership in `checkmark`.
/// Bins with `n_k = 0` contribute exactly zero.
pub fn categorical_lr_split(
    counts: &[f64],
    p_null: &[f64],
    p_mle: &[f64],
    checkmark: &[bool],
) -> Result<LrSplit> {
    let k = counts.len();
    if p_null.len() != k || p_mle.len() != k || checkmark.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{k} counts, {} null probabilities, {} fitted probabilities, {} bin flags",
            p_null.len(),
            p_mle.len(),
            checkmark.len()
        )));
    }
    let mut d_check = 0.0;
    let mut d_cross = 0.0;
    let mut bins_dominated = true;
    for bin in 0..k {
        let n = counts[bin];
        if !(n >= 0.0) {
            return Err(Error::BadParams(format!("bin {bin} has negative count {n}")));
        }
        if n == 0.0 {
            continue;
        }
        if p_null[bin] <= 0.0 || p_mle[bin] <= 0.0 {
            return Err(Error::BadBins { bin, count: n });
        }
        bins_dominated &= p_mle[bin] >= p_null[bin];
        let term = 2.0 * n * (p_mle[bin] / p_null[bin]).ln();
        if checkmark[bin] {
            d_check += term;
        } else {
            d_cross += term;
        }
    }
    Ok(LrSplit {
        d_total: d_check + d_cross,
        d_check,
        d_cross,
        bins_dominated,
    })
}

/// Degrees of freedom used for the chi-square decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DofRule {
    /// One fitted parameter: `χ²₁`.
    #[default]
    OneParameter,
    /// `χ²_N` with `N` the number of readings, as in the published decision rule.
    PerReading,
}

impl DofRule {
    pub fn dof(&self, n_readings: usize) -> usize {
        match self {
            Self::OneParameter => 1,
            Self::PerReading => n_readings,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    #[serde(rename = "d")]
    pub d_statistic: f64,
    pub noncentrality: f64,
    #[serde(skip_serializing)]
    pub expected_d_alt_paper: f64,
    pub dof: usize,
    pub alpha: f64,
    pub decision: Decision,
}

/// Computes `D`, tests it against `χ²_dof`, and records the noncentrality
/// expected under the alternative `x_alt`.
pub fn detect(
    data: &Dataset,
    ow: &DVector<f64>,
    cov: &NoiseCovariance,
    sigma: f64,
    x_alt: f64,
    rule: DofRule,
    alpha: f64,
) -> Result<DetectionReport> {
    let rc = ReadingCovariance::new(cov, sigma)?;
    let d = lr_statistic_with(&rc, data, ow)?;
    let expected = expected_d_with(&rc, x_alt, ow)?;
    let dof = rule.dof(data.len());
    Ok(DetectionReport {
        d_statistic: d,
        noncentrality: expected.noncentrality,
        expected_d_alt_paper: expected.paper_form,
        dof,
        alpha,
        decision: chi2_test(d, dof, alpha)?,
    })
}
