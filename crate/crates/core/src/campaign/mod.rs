//! Monte Carlo campaigns: per-trial seeding, the closed-loop trial, parallel
//! execution with resume, and reports.

mod report;
mod runner;
mod seed;
mod trial;

pub use report::{
    aggregate_records, markdown, results_csv, success_counts_from_csv, Aggregate, ConfigAggregate, LatencySummary,
    ReportFormat, CSV_HEADER,
};
pub use runner::{load_records, render_report, run_campaign, CampaignError, CampaignPlan, CampaignSummary, Manifest};
pub use seed::{config_hash, derive_seed, fnv1a64, splitmix64};
pub use trial::{compute_faults, run_trial, TraceRow, TrialOptions, TrialRecord, TrialRun};

use serde::{Deserialize, Serialize};

use crate::scenario::{serialize, ResolvedConfig};

pub const DEFAULT_TRIALS: u64 = 240;

/// Identity of one resolved configuration within a campaign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigInfo {
    pub config_id: usize,
    pub scenario: String,
    pub binding: String,
    pub hash: u64,
    /// Canonical text of the resolved scenario.
    pub source: String,
}

impl ConfigInfo {
    pub fn new(config_id: usize, config: &ResolvedConfig) -> Self {
        Self {
            config_id,
            scenario: config.scenario.name.clone(),
            binding: config.binding_label(),
            hash: config_hash(config),
            source: serialize(&config.scenario),
        }
    }
}
