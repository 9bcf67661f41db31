//! Chi-square tail probabilities and quantiles.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::{Error, Result};

/// `Pr[χ²_dof > x]` via the regularized upper incomplete gamma function.
pub fn chi2_survival(dof: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof as f64 / 2.0, x / 2.0)
}

/// Value `t` with `Pr[χ²_dof > t] = alpha`, found by bisection to a relative
/// bracket width of 1e-13.
pub fn chi2_upper_quantile(dof: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::BadAlpha(alpha));
    }
    if dof == 0 {
        return Err(Error::BadParams("chi-square needs at least 1 degree of freedom".into()));
    }
    let mut lo = 0.0_f64;
    let mut hi = dof as f64 + 10.0;
    while chi2_survival(dof, hi) > alpha {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if chi2_survival(dof, mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Reject,
    Retain,
}

/// Rejects the null when `d` exceeds the upper-`alpha` chi-square quantile.
pub fn chi2_test(d: f64, dof: usize, alpha: f64) -> Result<Decision> {
    let threshold = chi2_upper_quantile(dof, alpha)?;
    Ok(if d > threshold {
        Decision::Reject
    } else {
        Decision::Retain
    })
}

/// Mean, unbiased variance and standard error of a sample, summed in order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                variance: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self { n, mean, variance }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }
}
