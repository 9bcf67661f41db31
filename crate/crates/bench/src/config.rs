//! TOML experiment configuration and its validation into model objects.
//!
//! Complex matrices and vectors are written as row-major lists of `[re, im]`
//! pairs. Basis vectors are the rows of `system.basis`. Outcome indices in the
//! file are 1-based.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use wva_core::detection::DofRule;
use wva_core::fisher::{JointModel, NegligiblePolicy};
use wva_core::noise::{build_covariance, CovarianceKind, NoiseCovariance};
use wva_core::quantum::{CouplingConfig, MeterSpec, Observable, OrthonormalBasis, PureState};
use wva_core::C64;

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    pub meter: MeterSection,
    pub noise: NoiseSection,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fisher: Option<FisherSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub dimension: usize,
    pub observable: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<[f64; 2]>>,
    /// Shorthand for `initial_state = cos θ|0> + sin θ|1>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub basis: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeterSection {
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub x_true: f64,
    pub n_per_trial: usize,
    pub trials: usize,
    pub postselect_outcome: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub dof: DofRule,
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Sigma,
    XTrue,
    NPerTrial,
    Theta,
}

impl SweepParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Sigma => "sigma",
            Self::XTrue => "x_true",
            Self::NPerTrial => "n_per_trial",
            Self::Theta => "theta",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherSection {
    pub dim_b: usize,
    pub hamiltonian: Vec<[f64; 2]>,
    pub meter_state: Vec<[f64; 2]>,
    #[serde(default = "default_fisher_x")]
    pub x: Vec<f64>,
    #[serde(default)]
    pub policy: NegligiblePolicy,
}

fn default_fisher_x() -> Vec<f64> {
    vec![0.0]
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let location = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "<config>".into());
            ConfigError::new(location, message)
        })
    }
}

/// Model objects for one experiment point.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub coupling: CouplingConfig,
    pub covariance: NoiseCovariance,
    pub n_per_trial: usize,
    pub trials: usize,
    /// 0-based.
    pub postselect: usize,
    pub seed: u64,
    pub alpha: f64,
    pub dof: DofRule,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Copy of this config with one swept parameter set and the sweep removed.
    pub fn at_point(&self, param: SweepParam, value: f64) -> Result<Self, ConfigError> {
        let mut c = self.clone();
        c.sweep = None;
        match param {
            SweepParam::Sigma => c.meter.sigma = value,
            SweepParam::XTrue => c.run.x_true = value,
            SweepParam::NPerTrial => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(ConfigError::new(
                        "sweep.values",
                        format!("n_per_trial values must be positive integers, got {value}"),
                    ));
                }
                c.run.n_per_trial = value as usize;
            }
            SweepParam::Theta => {
                c.system.theta = Some(value);
                c.system.initial_state = None;
            }
        }
        Ok(c)
    }

    pub fn sweep_points(&self) -> Result<(SweepParam, Vec<f64>), ConfigError> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| ConfigError::new("sweep", "missing [sweep] section"))?;
        if sweep.values.is_empty() {
            return Err(ConfigError::new("sweep.values", "value list is empty"));
        }
        if let Some(bad) = sweep.values.iter().find(|v| !v.is_finite()) {
            return Err(ConfigError::new("sweep.values", format!("non-finite value {bad}")));
        }
        Ok((sweep.param, sweep.values.clone()))
    }

    pub fn observable(&self) -> Result<Observable, ConfigError> {
        let d = self.dimension()?;
        let m = complex_matrix("system.observable", &self.system.observable, d)?;
        Observable::new(m).map_err(|e| ConfigError::new("system.observable", e.to_string()))
    }

    pub fn initial_state(&self) -> Result<PureState, ConfigError> {
        let d = self.dimension()?;
        match (&self.system.initial_state, self.system.theta) {
            (Some(_), Some(_)) => Err(ConfigError::new(
                "system.theta",
                "give either initial_state or theta, not both",
            )),
            (None, None) => Err(ConfigError::new("system.initial_state", "missing")),
            (None, Some(theta)) => {
                if !theta.is_finite() {
                    return Err(ConfigError::new("system.theta", "must be finite"));
                }
                Ok(PureState::rotated(d, theta))
            }
            (Some(amps), None) => state("system.initial_state", amps, d),
        }
    }

    pub fn basis(&self) -> Result<OrthonormalBasis, ConfigError> {
        let d = self.dimension()?;
        let m = complex_matrix("system.basis", &self.system.basis, d)?;
        OrthonormalBasis::from_rows(&m).map_err(|e| ConfigError::new("system.basis", e.to_string()))
    }

    fn dimension(&self) -> Result<usize, ConfigError> {
        let d = self.system.dimension;
        if d < 2 {
            return Err(ConfigError::new("system.dimension", format!("must be at least 2, got {d}")));
        }
        Ok(d)
    }

    /// Checks every field and builds the model objects.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let observable = self.observable()?;
        let initial = self.initial_state()?;
        let basis = self.basis()?;

        let sigma = self.meter.sigma;
        let meter = MeterSpec::new(sigma).map_err(|e| ConfigError::new("meter.sigma", e.to_string()))?;

        let run = &self.run;
        if !run.x_true.is_finite() {
            return Err(ConfigError::new("run.x_true", "must be finite"));
        }
        if run.n_per_trial == 0 {
            return Err(ConfigError::new("run.n_per_trial", "must be at least 1"));
        }
        if run.trials == 0 {
            return Err(ConfigError::new("run.trials", "must be at least 1"));
        }
        let d = basis.dim();
        if run.postselect_outcome == 0 || run.postselect_outcome > d {
            return Err(ConfigError::new(
                "run.postselect_outcome",
                format!("must lie in [1, {d}], got {}", run.postselect_outcome),
            ));
        }
        if !(run.alpha > 0.0 && run.alpha < 1.0) {
            return Err(ConfigError::new("run.alpha", format!("must lie in (0, 1), got {}", run.alpha)));
        }

        let kind: CovarianceKind = self
            .noise
            .kind
            .parse()
            .map_err(|e: wva_core::Error| ConfigError::new("noise.kind", e.to_string()))?;
        let covariance = build_covariance(kind, &self.noise.params, run.n_per_trial)
            .map_err(|e| ConfigError::new("noise.params", e.to_string()))?;

        let coupling = CouplingConfig::new(observable, initial, basis, meter, run.x_true)
            .map_err(|e| ConfigError::new("system", e.to_string()))?;

        Ok(Resolved {
            coupling,
            covariance,
            n_per_trial: run.n_per_trial,
            trials: run.trials,
            postselect: run.postselect_outcome - 1,
            seed: run.seed,
            alpha: run.alpha,
            dof: run.dof,
        })
    }

    /// Joint models for the `[fisher]` section, one per listed `x`.
    pub fn fisher_models(&self) -> Result<(Vec<JointModel>, NegligiblePolicy), ConfigError> {
        let spec = self
            .fisher
            .as_ref()
            .ok_or_else(|| ConfigError::new("fisher", "missing [fisher] section"))?;
        let initial_a = self.initial_state()?;
        let basis_a = self.basis()?;
        let db = spec.dim_b;
        if db < 1 {
            return Err(ConfigError::new("fisher.dim_b", "must be at least 1"));
        }
        let h = complex_matrix("fisher.hamiltonian", &spec.hamiltonian, initial_a.dim() * db)?;
        let phi = state("fisher.meter_state", &spec.meter_state, db)?;
        if spec.x.is_empty() {
            return Err(ConfigError::new("fisher.x", "value list is empty"));
        }
        let models = spec
            .x
            .iter()
            .map(|&x| {
                JointModel::new(h.clone(), initial_a.clone(), phi.clone(), basis_a.clone(), x)
                    .map_err(|e| ConfigError::new("fisher", e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok((models, spec.policy))
    }
}

fn complex_matrix(path: &str, pairs: &[[f64; 2]], d: usize) -> Result<DMatrix<C64>, ConfigError> {
    if pairs.len() != d * d {
        return Err(ConfigError::new(
            path,
            format!("expected {} entries for a {d}x{d} matrix, got {}", d * d, pairs.len()),
        ));
    }
    let entries: Vec<C64> = pairs.iter().map(|&[re, im]| C64::new(re, im)).collect();
    Ok(DMatrix::from_row_slice(d, d, &entries))
}

/// Input states are rescaled to unit norm.
fn state(path: &str, pairs: &[[f64; 2]], d: usize) -> Result<PureState, ConfigError> {
    if pairs.len() != d {
        return Err(ConfigError::new(path, format!("expected {d} amplitudes, got {}", pairs.len())));
    }
    let v = DVector::from_iterator(d, pairs.iter().map(|&[re, im]| C64::new(re, im)));
    PureState::normalized(v).map_err(|e| ConfigError::new(path, e.to_string()))
}
