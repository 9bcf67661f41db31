//! Fisher-information reports for the `[fisher]` config section.

use serde::{Deserialize, Serialize};

use wva_core::fisher::{fi_decomposition, QfiReport};

use crate::config::ExperimentConfig;
use crate::error::BenchError;

/// Slack for the inequality checks recorded alongside each report.
pub const CHAIN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherRecord {
    #[serde(flatten)]
    pub report: QfiReport,
    /// `p_f I_f ≤ I_AB` for every outcome.
    pub postselection_bound: bool,
    /// `p_f I_f ≤ I_ρ ≤ I_AB` for every outcome.
    pub chain: bool,
}

pub fn run_fisher(config: &ExperimentConfig) -> Result<Vec<FisherRecord>, BenchError> {
    let (models, policy) = config.fisher_models()?;
    models
        .iter()
        .map(|m| {
            let report = fi_decomposition(m, policy)?;
            if !report.excluded.is_empty() {
                log::info!(
                    "x = {}: excluded outcomes {:?} carrying probability {:e}",
                    report.x,
                    report.excluded.iter().map(|k| k + 1).collect::<Vec<_>>(),
                    report.excluded_mass
                );
            }
            Ok(FisherRecord {
                postselection_bound: report.postselection_bound_holds(CHAIN_SLACK),
                chain: report.chain_holds(CHAIN_SLACK),
                report,
            })
        })
        .collect()
}
