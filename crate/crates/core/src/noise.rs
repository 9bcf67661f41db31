//! Additive technical noise `η ~ N(0, K)` on the meter readings.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues down to `-PSD_TOL` are accepted and clipped to zero when sampling.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceKind {
    /// `variance · 1`
    White,
    /// `η̄² · 11ᵀ`, fully correlated (long correlation time)
    Constant,
    /// `variance · ρ^|j-k|`
    Ar1,
    Custom,
}

impl std::str::FromStr for CovarianceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "white" => Ok(Self::White),
            "constant" => Ok(Self::Constant),
            "ar1" => Ok(Self::Ar1),
            "custom" => Ok(Self::Custom),
            other => Err(Error::BadParams(format!("unknown noise kind '{other}'"))),
        }
    }
}

/// Symmetric positive-semidefinite covariance of the technical noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCovariance {
    matrix: DMatrix<f64>,
    kind: CovarianceKind,
}

impl NoiseCovariance {
    /// Validates a user-supplied matrix.
    pub fn custom(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = (&matrix - matrix.transpose()).amax();
        if deviation > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { deviation });
        }
        let cov = Self {
            matrix,
            kind: CovarianceKind::Custom,
        };
        let min_eigenvalue = cov.min_eigenvalue();
        if min_eigenvalue < -PSD_TOL {
            return Err(Error::NotPsd { min_eigenvalue });
        }
        Ok(cov)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(n, n),
            kind: CovarianceKind::White,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> CovarianceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        self.matrix.clone().symmetric_eigenvalues()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Spectral norm `‖K‖`, the largest eigenvalue of a PSD matrix.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            matrix: &self.matrix * c,
            kind: self.kind,
        }
    }
}

fn check_variance(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::BadParams(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

fn expect_params(kind: CovarianceKind, params: &[f64], count: usize) -> Result<()> {
    if params.len() != count {
        return Err(Error::BadParams(format!(
            "{kind:?} covariance takes {count} parameter(s), got {}",
            params.len()
        )));
    }
    Ok(())
}

/// Builds an `n × n` covariance of the requested kind.
///
/// `params` holds `(variance)` for white, `(η̄²)` for constant,
/// `(variance, ρ)` with `|ρ| < 1` for ar1, and the row-major matrix
/// entries for custom.
pub fn build_covariance(kind: CovarianceKind, params: &[f64], n: usize) -> Result<NoiseCovariance> {
    if n == 0 {
        return Err(Error::BadParams("covariance dimension must be at least 1".into()));
    }
    let matrix = match kind {
        CovarianceKind::White => {
            expect_params(kind, params, 1)?;
            check_variance("variance", params[0])?;
            DMatrix::identity(n, n) * params[0]
        }
        CovarianceKind::Constant => {
            expect_params(kind, params, 1)?;
            check_variance("constant covariance", params[0])?;
            DMatrix::from_element(n, n, params[0])
        }
        CovarianceKind::Ar1 => {
            expect_params(kind, params, 2)?;
            let (variance, rho) = (params[0], params[1]);
            check_variance("variance", variance)?;
            if !(rho.abs() < 1.0) {
                return Err(Error::BadParams(format!("ar1 correlation must satisfy |rho| < 1, got {rho}")));
            }
            DMatrix::from_fn(n, n, |j, k| variance * rho.powi(j.abs_diff(k) as i32))
        }
        CovarianceKind::Custom => {
            expect_params(kind, params, n * n)?;
            return NoiseCovariance::custom(DMatrix::from_row_slice(n, n, params));
        }
    };
    Ok(NoiseCovariance { matrix, kind })
}

/// Symmetric square-root factor `V·diag(√max(λ, 0))` of a covariance,
/// reusable across many draws.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    factor: DMatrix<f64>,
}

impl NoiseSampler {
    pub fn new(cov: &NoiseCovariance) -> Self {
        let eig = SymmetricEigen::new(cov.matrix().clone());
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let mut factor = eig.eigenvectors;
        for (mut col, r) in factor.column_iter_mut().zip(roots.iter()) {
            col *= *r;
        }
        Self { factor }
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.factor.ncols(), |_, _| StandardNormal.sample(rng));
        &self.factor * z
    }
}

/// One draw of `η ~ N(0, K)`.
pub fn sample_noise<R: Rng + ?Sized>(cov: &NoiseCovariance, rng: &mut R) -> DVector<f64> {
    NoiseSampler::new(cov).sample(rng)
}

fn lexicographic(a: &DVector<f64>, b: &DVector<f64>) -> Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// `Σ_j η_j η_jᵀ / (M - 1)` for zero-mean noise samples recorded without a signal.
///
/// Samples are accumulated in lexicographic order so the result does not
/// depend on the order they were collected in.
pub fn sample_covariance_estimate(samples: &[DVector<f64>]) -> Result<NoiseCovariance> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::TooFewSamples(m));
    }
    let n = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "noise samples of length {n} and {}",
            bad.len()
        )));
    }
    let mut ordered: Vec<&DVector<f64>> = samples.iter().collect();
    ordered.sort_by(|a, b| lexicographic(a, b));

    let mut acc = DMatrix::<f64>::zeros(n, n);
    for s in ordered {
        acc.ger(1.0, s, s, 1.0);
    }
    acc /= (m - 1) as f64;
    let sym = (&acc + acc.transpose()) * 0.5;
    Ok(NoiseCovariance {
        matrix: sym,
        kind: CovarianceKind::Custom,
    })
}
