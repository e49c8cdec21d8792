//! Report envelope and serialization.
//!
//! Per-trial records are fully determined by the experiment config (the
//! timing block and, for the solver benchmark, the measured runtimes are the
//! only non-reproducible values), so re-running a config re-produces the
//! records byte for byte, serially or in parallel.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Config echo embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub experiment: String,
    pub ns: Vec<u32>,
    pub m_values: Vec<usize>,
    pub bit_values: Vec<u32>,
    pub trials: u64,
    pub seed: u64,
    pub lll_delta: String,
    pub lambda_policy: String,
    pub max_retries: u32,
    pub brute_force_check: bool,
    pub parallel: usize,
}

/// Wall-clock summary, reported in microseconds from a monotonic clock.
/// Excluded from the reproducibility contract.
#[derive(Debug, Clone, Serialize)]
pub struct TimingSummary {
    pub total_us: u64,
    pub mean_trial_us: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage_means_us: Option<StageMeans>,
}

/// Mean per-run stage costs for pipeline experiments.
#[derive(Debug, Clone, Serialize)]
pub struct StageMeans {
    pub sample: f64,
    pub filter: f64,
    pub assemble: f64,
    pub recover: f64,
    pub select: f64,
    pub measure: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport<R: Serialize, A: Serialize> {
    pub schema_version: u32,
    pub experiment: String,
    pub config: ConfigEcho,
    pub records: Vec<R>,
    pub aggregates: A,
    pub timing: TimingSummary,
}

impl<R: Serialize, A: Serialize> ExperimentReport<R, A> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// The records array alone, for byte-level reproducibility checks.
    pub fn records_json(&self) -> String {
        serde_json::to_string(&self.records).expect("records serialization")
    }
}

/// Render aggregate rows as CSV.
pub trait CsvReport {
    fn to_csv(&self) -> String;
}
