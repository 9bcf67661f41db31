use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Outcome indices carried by errors are 0-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dimension must be at least {min}, got {got}")]
    InvalidDimension { min: usize, got: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not symmetric (max deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("basis is not orthonormal (max Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("{}weak value undefined: |<f|i>| = {overlap:e} is below the overlap floor", outcome_prefix(*.outcome))]
    DegenerateOverlap { outcome: Option<usize>, overlap: f64 },

    #[error("{}weak value is complex: {re} + {im}i", outcome_prefix(*.outcome))]
    ComplexWeakValue { outcome: Option<usize>, re: f64, im: f64 },

    #[error("covariance is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("sample covariance needs at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("weak-value vector carries no information (all entries zero)")]
    ZeroInformation,

    #[error("no post-selected events: outcome {outcome} never occurred")]
    NoPostselectedEvents { outcome: usize },

    #[error("variance must be positive, got {0}")]
    BadVariance(f64),

    #[error("bin {bin} has {count} counts but zero probability")]
    BadBins { bin: usize, count: f64 },

    #[error("significance level must lie in (0, 1), got {0}")]
    BadAlpha(f64),

    #[error("{}negligible probability {p:e}", outcome_prefix(*.outcome))]
    NegligibleProbability { outcome: Option<usize>, p: f64 },
}

fn outcome_prefix(outcome: Option<usize>) -> String {
    match outcome {
        Some(k) => format!("outcome {}: ", k + 1),
        None => String::new(),
    }
}

impl Error {
    /// Attach an outcome index to weak-value errors.
    pub(crate) fn at_outcome(self, k: usize) -> Self {
        match self {
            Error::DegenerateOverlap { overlap, .. } => Error::DegenerateOverlap {
                outcome: Some(k),
                overlap,
            },
            Error::ComplexWeakValue { re, im, .. } => Error::ComplexWeakValue {
                outcome: Some(k),
                re,
                im,
            },
            Error::NegligibleProbability { p, .. } => Error::NegligibleProbability { outcome: Some(k), p },
            other => other,
        }
    }
}
