//! Estimators of the coupling strength `x` from readings `r ~ N(x·O_w(f), K + σ²1)`.
//!
//! * MLE: generalized least squares with weight `(K + σ²1)⁻¹`.
//! * SMLE: ordinary least squares, `O_wᵀr / ‖O_w‖²`; needs no knowledge of `K`.
//! * WVA: keeps only trials with the post-selected outcome and rescales
//!   their mean by the weak value.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::noise::NoiseCovariance;
use crate::quantum::{expected_o_squared, Observable, OrthonormalBasis, OutcomeTable, PureState};
use crate::{Error, Result};

/// Outcome indices and noisy meter readings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    outcomes: Vec<usize>,
    readings: DVector<f64>,
}

impl Dataset {
    /// `num_outcomes` bounds the outcome indices (`0..num_outcomes`).
    pub fn new(outcomes: Vec<usize>, readings: Vec<f64>, num_outcomes: usize) -> Result<Self> {
        if outcomes.len() != readings.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} outcomes vs {} readings",
                outcomes.len(),
                readings.len()
            )));
        }
        if let Some(bad) = outcomes.iter().find(|&&f| f >= num_outcomes) {
            return Err(Error::BadParams(format!(
                "outcome index {bad} outside 0..{num_outcomes}"
            )));
        }
        Ok(Self {
            outcomes,
            readings: DVector::from_vec(readings),
        })
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn readings(&self) -> &DVector<f64> {
        &self.readings
    }

    pub fn with_readings(&self, readings: DVector<f64>) -> Self {
        assert_eq!(readings.len(), self.outcomes.len());
        Self {
            outcomes: self.outcomes.clone(),
            readings,
        }
    }

    /// Indicator vector of the trials that produced `outcome`.
    pub fn indicator(&self, outcome: usize) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.outcomes.iter().map(|&f| if f == outcome { 1.0 } else { 0.0 }),
        )
    }

    pub fn count(&self, outcome: usize) -> usize {
        self.outcomes.iter().filter(|&&f| f == outcome).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Mle,
    Smle,
    Wva,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [Self::Mle, Self::Smle, Self::Wva];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Mle => "mle",
            Self::Smle => "smle",
            Self::Wva => "wva",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    /// Closed-form variance: `[O_wᵀQO_w]⁻¹` (mle), the SMLE sandwich (smle),
    /// or the leading term `σ²/(N_✓ O_w(✓)²)` (wva).
    pub analytic_variance: f64,
    /// Exact variance of the estimator given the outcome sequence.
    pub conditional_variance: f64,
    pub estimator: EstimatorKind,
    pub n_used: usize,
}

/// Covariance of the readings, `K + σ²1`, held as a Cholesky factor.
#[derive(Debug, Clone)]
pub struct ReadingCovariance {
    noise: DMatrix<f64>,
    sigma: f64,
    chol: Cholesky<f64, Dyn>,
}

impl ReadingCovariance {
    pub fn new(cov: &NoiseCovariance, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::BadParams(format!("sigma must be > 0, got {sigma}")));
        }
        let n = cov.dim();
        let total = cov.matrix() + DMatrix::identity(n, n) * (sigma * sigma);
        let chol = Cholesky::new(total)
            .ok_or_else(|| Error::BadParams("K + sigma^2 1 is not positive definite".into()))?;
        Ok(Self {
            noise: cov.matrix().clone(),
            sigma,
            chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.noise.nrows()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `Q v` with `Q = (K + σ²1)⁻¹`.
    pub fn precision_times(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }

    /// `aᵀ Q b`.
    pub fn precision_form(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&self.chol.solve(b))
    }

    /// `aᵀ (K + σ²1) b`.
    pub fn covariance_form(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(&self.noise * b)) + self.sigma * self.sigma * a.dot(b)
    }

    /// `aᵀ K a`.
    pub fn noise_form(&self, a: &DVector<f64>) -> f64 {
        a.dot(&(&self.noise * a))
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "covariance is {}x{} but the data has {n} readings",
                self.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_information(ow: &DVector<f64>) -> Result<()> {
    if ow.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroInformation);
    }
    Ok(())
}

/// Maximum likelihood estimate `O_wᵀQr / O_wᵀQO_w`.
pub fn mle(data: &Dataset, ow: &DVector<f64>, cov: &NoiseCovariance, sigma: f64) -> Result<EstimateReport> {
    mle_with(&ReadingCovariance::new(cov, sigma)?, data, ow)
}

pub fn mle_with(rc: &ReadingCovariance, data: &Dataset, ow: &DVector<f64>) -> Result<EstimateReport> {
    rc.check_len(data.len())?;
    rc.check_len(ow.len())?;
    check_information(ow)?;
    let q_ow = rc.precision_times(ow);
    let info = ow.dot(&q_ow);
    let variance = 1.0 / info;
    Ok(EstimateReport {
        estimate: q_ow.dot(data.readings()) / info,
        analytic_variance: variance,
        conditional_variance: variance,
        estimator: EstimatorKind::Mle,
        n_used: data.len(),
    })
}

/// `O_wᵀ(K + σ²1)O_w / ‖O_w‖⁴`, the exact variance of the SMLE.
pub fn smle_variance(ow: &DVector<f64>, cov: &NoiseCovariance, sigma: f64) -> Result<f64> {
    smle_variance_with(&ReadingCovariance::new(cov, sigma)?, ow)
}

pub fn smle_variance_with(rc: &ReadingCovariance, ow: &DVector<f64>) -> Result<f64> {
    rc.check_len(ow.len())?;
    check_information(ow)?;
    let norm2 = ow.norm_squared();
    Ok(rc.covariance_form(ow, ow) / (norm2 * norm2))
}

/// Least-squares estimate `O_wᵀr / ‖O_w‖²`. The estimate ignores `K`; `cov`
/// and `sigma` only enter the reported variance.
pub fn smle(data: &Dataset, ow: &DVector<f64>, cov: &NoiseCovariance, sigma: f64) -> Result<EstimateReport> {
    smle_with(&ReadingCovariance::new(cov, sigma)?, data, ow)
}

pub fn smle_with(rc: &ReadingCovariance, data: &Dataset, ow: &DVector<f64>) -> Result<EstimateReport> {
    rc.check_len(data.len())?;
    let variance = smle_variance_with(rc, ow)?;
    Ok(EstimateReport {
        estimate: ow.dot(data.readings()) / ow.norm_squared(),
        analytic_variance: variance,
        conditional_variance: variance,
        estimator: EstimatorKind::Smle,
        n_used: data.len(),
    })
}

/// Post-selected estimate `Σ_{j∈✓} r_j / (N_✓ O_w(✓))`.
pub fn wva(
    data: &Dataset,
    check_outcome: usize,
    ow_check: f64,
    sigma: f64,
    cov: &NoiseCovariance,
) -> Result<EstimateReport> {
    wva_with(&ReadingCovariance::new(cov, sigma)?, data, check_outcome, ow_check)
}

pub fn wva_with(
    rc: &ReadingCovariance,
    data: &Dataset,
    check_outcome: usize,
    ow_check: f64,
) -> Result<EstimateReport> {
    rc.check_len(data.len())?;
    if ow_check == 0.0 {
        return Err(Error::ZeroInformation);
    }
    let keep = data.indicator(check_outcome);
    let n_check = data.count(check_outcome);
    if n_check == 0 {
        return Err(Error::NoPostselectedEvents {
            outcome: check_outcome,
        });
    }
    let scale = n_check as f64 * ow_check;
    let sigma2 = rc.sigma() * rc.sigma();
    Ok(EstimateReport {
        estimate: keep.dot(data.readings()) / scale,
        analytic_variance: sigma2 / (n_check as f64 * ow_check * ow_check),
        conditional_variance: rc.covariance_form(&keep, &keep) / (scale * scale),
        estimator: EstimatorKind::Wva,
        n_used: n_check,
    })
}

/// `x / √variance`.
pub fn snr(x: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::BadVariance(variance));
    }
    Ok(x / variance.sqrt())
}

/// `E_f[‖O_w(f)‖²] = N<i|O²|i>` over `n` independent outcomes.
pub fn norm_squared_mean(n: usize, initial: &PureState, observable: &Observable) -> Result<f64> {
    Ok(n as f64 * expected_o_squared(initial, observable)?)
}

/// `N Σ_k p_k(1 - p_k) O_w(f_k)⁴`, the published expression for `Var_f[‖O_w(f)‖²]`.
///
/// This drops the multinomial cross-covariances; [`exact_norm_variance`] keeps them.
pub fn paper_norm_variance(n: usize, probs: &[f64], weak_values: &[f64]) -> f64 {
    n as f64
        * probs
            .iter()
            .zip(weak_values)
            .map(|(p, w)| p * (1.0 - p) * w.powi(4))
            .sum::<f64>()
}

/// `N (Σ_k p_k O_w⁴ - (Σ_k p_k O_w²)²)`.
pub fn exact_norm_variance(n: usize, probs: &[f64], weak_values: &[f64]) -> f64 {
    let (m2, m4) = probs
        .iter()
        .zip(weak_values)
        .fold((0.0, 0.0), |(m2, m4), (p, w)| (m2 + p * w * w, m4 + p * w.powi(4)));
    n as f64 * (m4 - m2 * m2)
}

/// Second-order total variance of the (S)MLE averaged over outcome sequences:
///
/// `σ²/(n<O²>) + σ² Σ_k p_k(1-p_k)O_w(f_k)⁴ / (n²<O²>³)`.
///
/// Outcomes orthogonal to the initial state (no weak value, probability zero)
/// are left out of the sum.
pub fn total_variance_prediction(
    n: usize,
    initial: &PureState,
    observable: &Observable,
    basis: &OrthonormalBasis,
    sigma: f64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::BadParams("n must be at least 1".into()));
    }
    let table = OutcomeTable::new(observable, initial, basis)?;
    let (probs, ws): (Vec<f64>, Vec<f64>) = table
        .probs
        .iter()
        .zip(&table.weak_values)
        .filter_map(|(p, w)| w.map(|w| (*p, w)))
        .unzip();
    let o2 = expected_o_squared(initial, observable)?;
    let mean = n as f64 * o2;
    let var = paper_norm_variance(n, &probs, &ws);
    let sigma2 = sigma * sigma;
    Ok(sigma2 / mean + sigma2 * var / mean.powi(3))
}
