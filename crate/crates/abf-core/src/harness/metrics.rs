//! Replay outcome report: JSON object and CSV row forms.

use serde::{Deserialize, Serialize};

use super::trace::WorkloadConfig;
use crate::memory::ScoreWeights;

/// CSV column order for report rows. `steps` is the trace length and `B` the
/// cardinality budget; `retention_by_stage` is semicolon-joined.
pub const CSV_HEADER: &str =
    "policy,seed,steps,B,k,recall_at_k,fmr,context_usage,peak_memory,tradeoff,retention_by_stage";

/// Everything one replay produced, with its inputs echoed so the report is
/// self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_seed: Option<u64>,
    pub seed: u64,
    pub events: u64,
    pub queries: u64,
    pub budget: usize,
    pub k: usize,
    pub weights: ScoreWeights,
    pub recall_at_k: f64,
    pub fmr: f64,
    pub retention_by_stage: Vec<f64>,
    pub context_usage: f64,
    pub peak_memory: usize,
    pub tradeoff: f64,
    pub workload: WorkloadConfig,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    pub fn csv_row(&self) -> String {
        let retention = self
            .retention_by_stage
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(";");
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.policy,
            self.seed,
            self.events,
            self.budget,
            self.k,
            self.recall_at_k,
            self.fmr,
            self.context_usage,
            self.peak_memory,
            self.tradeoff,
            retention
        )
    }
}
