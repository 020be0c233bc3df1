//! Monte-Carlo campaigns, statistics and result export.

mod campaign;
mod config;
mod export;
#[cfg(test)]
mod invariants;
mod stats;
mod tuning;

pub use campaign::{run_campaign, run_campaign_with, Execution};
pub use config::{CampaignConfig, Scenario};
pub use export::{export_results, ExportFormat, Summary};
pub use stats::{percentile, Metric, PhaseSample, Percentiles, RunStatistics, UeCounts, UeSample, REPORTED_LEVELS};
pub use tuning::{calibrate, sweep, Calibration, Parameter, SweepPoint};
