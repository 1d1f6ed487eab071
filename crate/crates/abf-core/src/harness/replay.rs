//! Deterministic trace replay through a retention policy.
//!
//! Observes and updates insert into the store and trigger a policy-driven
//! prune whenever the store exceeds its budget. Queries retrieve the top-k
//! units by importance — always scored with the replay weights, whatever the
//! retention policy, so retrieval quality is held constant and retention is
//! the only experimental variable — then reinforce each retrieved unit's
//! access count. Ticks advance the clock only. Recall counts a query as a hit
//! when a unit carrying the queried key's current version is retrieved; the
//! false-memory rate is the fraction of retrieved units carrying a superseded
//! version of their own key.

use std::collections::BTreeMap;

use super::metrics::MetricsReport;
use super::trace::{EventKind, Trace, TraceEvent};
use super::HarnessError;
use crate::embedding::EmbedderConfig;
use crate::memory::{
    rank_by_importance, tradeoff_metric, Budget, MemoryStore, Query, ScoreWeights,
};
use crate::policy::{Policy, PolicyId};

/// Metadata keys the replay writes; the store itself never interprets them.
pub const FACT_KEY: &str = "fact_key";
pub const FACT_VERSION: &str = "fact_version";

/// A replay's full result: the report plus the final store and the count of
/// units removed by pruning (every id ever created is either still in the
/// store or accounted for here).
#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub report: MetricsReport,
    pub store: MemoryStore,
    pub removed: u64,
}

/// The `k` highest-importance unit ids for `query`, best first, under the
/// same tie-break chain pruning uses. Fewer than `k` when the store is small.
pub fn retrieve_topk(
    store: &MemoryStore,
    query: &Query,
    k: usize,
    weights: &ScoreWeights,
) -> Result<Vec<u64>, HarnessError> {
    let mut ranked = rank_by_importance(store.units(), Some(query), query.step, weights)?;
    ranked.truncate(k);
    Ok(ranked)
}

/// Replay a trace under one policy and report the metrics.
pub fn replay(
    trace: &Trace,
    policy: &PolicyId,
    weights: &ScoreWeights,
    budget: Budget,
    k: usize,
) -> Result<MetricsReport, HarnessError> {
    Ok(replay_outcome(trace, policy, weights, budget, k)?.report)
}

/// Replay a trace, also returning the final store state.
pub fn replay_outcome(
    trace: &Trace,
    policy: &PolicyId,
    weights: &ScoreWeights,
    budget: Budget,
    k: usize,
) -> Result<ReplayOutcome, HarnessError> {
    if k == 0 {
        return Err(HarnessError::ZeroK);
    }
    let embedder = EmbedderConfig::default();
    let mut store = MemoryStore::new(embedder.dimension, *weights, budget)?;
    let mut policy_state = Policy::new(policy.clone());

    // Highest version (and its value) seen per key, maintained from the
    // event stream; recall and false-memory scoring read from here.
    let mut versions: BTreeMap<String, (String, u64)> = BTreeMap::new();

    let stages = trace.config.stages.max(1) as usize;
    let mut stage_queries = vec![0u64; stages];
    let mut stage_hits = vec![0u64; stages];
    let mut queries = 0u64;
    let mut hits = 0u64;
    let mut false_retrievals = 0u64;
    let mut total_retrievals = 0u64;
    let mut context_sum = 0.0f64;
    let mut peak_memory = 0usize;
    let mut removed = 0u64;
    let mut prev_step: Option<u64> = None;

    for (index, event) in trace.events.iter().enumerate() {
        let malformed = |reason: String| HarnessError::MalformedTrace {
            index,
            step: event.step,
            reason,
        };
        if prev_step.is_some_and(|p| event.step <= p) {
            return Err(malformed("steps not strictly increasing".to_string()));
        }
        prev_step = Some(event.step);
        store.advance_clock(event.step)?;

        match event.kind {
            EventKind::Observe | EventKind::Update => {
                let (key, value, text, version) = fact_fields(event).map_err(&malformed)?;
                if event.kind == EventKind::Update && !versions.contains_key(key) {
                    return Err(malformed(format!("update of never-observed key '{key}'")));
                }
                let superseding = versions
                    .get(key)
                    .is_none_or(|(_, current)| version >= *current);
                if superseding {
                    versions.insert(key.to_string(), (value.to_string(), version));
                }

                let mut metadata = BTreeMap::new();
                metadata.insert(FACT_KEY.to_string(), key.to_string());
                metadata.insert(FACT_VERSION.to_string(), version.to_string());
                store.insert(text, metadata, event.step)?;

                if policy.is_bounded() && store.len() > budget.max_items() {
                    let retained =
                        policy_state.select_retained(store.units(), None, event.step, budget)?;
                    removed += store.apply_retention(&retained).len() as u64;
                }
            }
            EventKind::Query => {
                let key = event
                    .key
                    .as_deref()
                    .ok_or_else(|| malformed("query without key".to_string()))?;
                let text = event
                    .text
                    .as_deref()
                    .ok_or_else(|| malformed("query without text".to_string()))?;
                let expected = event
                    .expected_value
                    .as_deref()
                    .ok_or_else(|| malformed("query without expected_value".to_string()))?;
                let (current_value, current_version) = versions
                    .get(key)
                    .ok_or_else(|| malformed(format!("query of never-observed key '{key}'")))?
                    .clone();
                if expected != current_value {
                    return Err(malformed(format!(
                        "expected_value '{expected}' does not match current value '{current_value}'"
                    )));
                }

                let query = Query::from_text(text, event.step, &embedder);
                let retrieved = retrieve_topk(&store, &query, k, weights)?;
                let mut hit = false;
                for id in &retrieved {
                    let unit = store.get(*id).expect("retrieved id exists");
                    let unit_key = unit.metadata.get(FACT_KEY);
                    let unit_version = unit
                        .metadata
                        .get(FACT_VERSION)
                        .and_then(|v| v.parse::<u64>().ok());
                    if let (Some(unit_key), Some(unit_version)) = (unit_key, unit_version) {
                        if unit_key == key && unit_version == current_version {
                            hit = true;
                        }
                        if versions
                            .get(unit_key)
                            .is_some_and(|(_, current)| unit_version < *current)
                        {
                            false_retrievals += 1;
                        }
                    }
                }
                total_retrievals += retrieved.len() as u64;
                for id in retrieved {
                    store.record_access(id, event.step)?;
                }

                queries += 1;
                let stage = stage_of(index, trace.events.len(), stages);
                stage_queries[stage] += 1;
                if hit {
                    hits += 1;
                    stage_hits[stage] += 1;
                }
            }
            EventKind::Tick => {
                if event.key.is_some()
                    || event.value.is_some()
                    || event.text.is_some()
                    || event.expected_value.is_some()
                    || event.version.is_some()
                {
                    return Err(malformed("tick carries payload fields".to_string()));
                }
            }
        }

        peak_memory = peak_memory.max(store.len());
        context_sum += store.len() as f64 / budget.max_items() as f64;
    }

    let recall_at_k = ratio(hits, queries);
    let fmr = ratio(false_retrievals, total_retrievals);
    let retention_by_stage: Vec<f64> = stage_hits
        .iter()
        .zip(&stage_queries)
        .map(|(&h, &q)| ratio(h, q))
        .collect();
    let context_usage = if trace.events.is_empty() {
        0.0
    } else {
        context_sum / trace.events.len() as f64
    };
    let tradeoff = tradeoff_metric(1.0 - recall_at_k, store.len(), budget, weights.eta());

    let report = MetricsReport {
        policy: policy.name().to_string(),
        policy_seed: match policy {
            PolicyId::Random { seed } => Some(*seed),
            _ => None,
        },
        seed: trace.config.seed,
        events: trace.events.len() as u64,
        queries,
        budget: budget.max_items(),
        k,
        weights: *weights,
        recall_at_k,
        fmr,
        retention_by_stage,
        context_usage,
        peak_memory,
        tradeoff,
        workload: trace.config.clone(),
    };
    Ok(ReplayOutcome {
        report,
        store,
        removed,
    })
}

/// Replay the same trace under each policy in turn, reports in input order.
pub fn compare(
    trace: &Trace,
    policies: &[PolicyId],
    weights: &ScoreWeights,
    budget: Budget,
    k: usize,
) -> Result<Vec<MetricsReport>, HarnessError> {
    policies
        .iter()
        .map(|policy| replay(trace, policy, weights, budget, k))
        .collect()
}

fn fact_fields(event: &TraceEvent) -> Result<(&str, &str, &str, u64), String> {
    let key = event.key.as_deref().ok_or("fact event without key")?;
    let value = event.value.as_deref().ok_or("fact event without value")?;
    let text = event.text.as_deref().ok_or("fact event without text")?;
    let version = event.version.ok_or("fact event without version")?;
    Ok((key, value, text, version))
}

/// Equal-segment stage of an event index.
fn stage_of(index: usize, events: usize, stages: usize) -> usize {
    ((index as u64 * stages as u64) / events.max(1) as u64) as usize
}

fn ratio(numerator: u64, denominator: u64) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}
