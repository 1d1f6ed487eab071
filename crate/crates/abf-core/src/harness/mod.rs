//! Synthetic workload generation, deterministic replay, and metrics.
//!
//! The harness turns the memory store and the retention policies into a
//! measurable experiment: it synthesizes long-horizon key/value dialogue
//! traces with updates, queries, and distractor noise, replays them through
//! any policy, and reports recall@k, false-memory rate, a per-stage retention
//! curve, context usage, and the loss/footprint tradeoff value.

mod metrics;
mod replay;
mod trace;
mod workload;

pub use metrics::{MetricsReport, CSV_HEADER};
pub use replay::{compare, replay, replay_outcome, retrieve_topk, ReplayOutcome};
pub use trace::{
    fact_text, question_text, read_jsonl, write_jsonl, EventKind, Trace, TraceEvent,
    WorkloadConfig, TRACE_VERSION,
};
pub use workload::generate_workload;

use crate::memory::MemoryError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid rate {name} = {value}: must be in [0, 1]")]
    InvalidRate { name: &'static str, value: f64 },
    #[error("rates exceed 1: update_rate + query_rate + distractor_rate = {sum}")]
    RatesExceedOne { sum: f64 },
    #[error("stages must be >= 1")]
    ZeroStages,
    #[error("k must be >= 1")]
    ZeroK,
    #[error("malformed trace at event {index} (step {step}): {reason}")]
    MalformedTrace {
        index: usize,
        step: u64,
        reason: String,
    },
    #[error("malformed trace file at line {line}: {reason}")]
    TraceRead { line: usize, reason: String },
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
