//! Budget-constrained agent memory with relevance-scored forgetting.
//!
//! The store keeps text memories scored by a weighted blend of recency
//! (exponential decay), usage frequency, and semantic similarity to the
//! active query, and enforces a hard cardinality budget by keeping the top-B
//! units whenever it overflows. Around it sit deterministic plumbing — a
//! hashed bag-of-words embedder, seeded workload synthesis, and a replay
//! harness — so that retention policies can be compared on identical traces
//! with reproducible, bit-stable numbers.
//!
//! Modules:
//! - [`embedding`]: tokenizer, FNV-1a hashed embeddings, cosine similarity.
//! - [`memory`]: the bounded store, scoring, pruning, and JSON snapshots.
//! - [`policy`]: the scored policy plus fifo/lru/lfu/random/none baselines
//!   behind one retention interface.
//! - [`harness`]: trace generation, replay, and the metrics report
//!   (recall@k, false-memory rate, stage retention, context usage, tradeoff).
//! - [`rng`]: the SplitMix64 generator everything seeds from.

pub mod embedding;
pub mod harness;
pub mod memory;
pub mod policy;
pub mod rng;

pub use embedding::EmbedderConfig;
pub use harness::{
    compare, generate_workload, read_jsonl, replay, replay_outcome, retrieve_topk, write_jsonl,
    EventKind, HarnessError, MetricsReport, Trace, TraceEvent, WorkloadConfig, CSV_HEADER,
};
pub use memory::{
    frequency, importance, prune_oracle, rank_by_importance, recency, tradeoff_metric, Budget,
    ImportanceBreakdown, MemoryError, MemoryStore, MemoryUnit, Query, ScoreWeights,
};
pub use policy::{Policy, PolicyError, PolicyId, POLICY_NAMES};
pub use rng::SplitMix64;
