//! Bounded memory store with relevance-scored retention.
//!
//! A [`MemoryStore`] appends [`MemoryUnit`]s under a logical step clock and
//! holds them against a cardinality budget. Each unit is scored by a weighted
//! sum of recency (exponential decay in age), frequency (saturating in access
//! count), and semantic similarity to an optional active query. When the
//! store exceeds its budget, [`MemoryStore::prune`] keeps the top-B units by
//! that score; because the objective is additive over units with a pure
//! cardinality constraint, top-B selection is exactly optimal, and
//! [`prune_oracle`] proves it by brute-force subset enumeration.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, embed, EmbedderConfig};

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MemoryError {
    #[error("dimension must be >= 1")]
    ZeroDimension,
    #[error("degenerate weights: alpha + beta + gamma must be > 0")]
    DegenerateWeights,
    #[error("weights must be non-negative and finite")]
    InvalidWeight,
    #[error("budget must be >= 1")]
    ZeroBudget,
    #[error("clock regression: step {step} < clock {clock}")]
    ClockRegression { step: u64, clock: u64 },
    #[error("no such unit: {id}")]
    NoSuchUnit { id: u64 },
    #[error("negative age: t {t} < inserted_at {inserted_at}")]
    NegativeAge { t: u64, inserted_at: u64 },
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("oracle size limit: {n} units exceeds 20")]
    OracleSizeLimit { n: usize },
    #[error("corrupt snapshot at byte {offset}: {reason}")]
    CorruptSnapshot { offset: usize, reason: String },
}

/// One stored memory element: content, its embedding, step timestamps, an
/// access count, and opaque metadata the store never interprets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryUnit {
    pub id: u64,
    pub content: String,
    pub embedding: Vec<f64>,
    pub inserted_at: u64,
    pub last_accessed_at: u64,
    pub access_count: u64,
    pub metadata: BTreeMap<String, String>,
}

/// Scoring weights: `alpha`/`beta`/`gamma` blend recency, frequency, and
/// similarity; `lambda` is the decay rate per step; `eta` is the tradeoff
/// coefficient for the memory-footprint penalty.
///
/// Stored in normalized form with `alpha + beta + gamma = 1`, so scaling all
/// three by a common factor before construction changes nothing downstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    alpha: f64,
    beta: f64,
    gamma: f64,
    lambda: f64,
    eta: f64,
}

impl ScoreWeights {
    pub fn new(
        alpha: f64,
        beta: f64,
        gamma: f64,
        lambda: f64,
        eta: f64,
    ) -> Result<Self, MemoryError> {
        for w in [alpha, beta, gamma, lambda, eta] {
            if !w.is_finite() || w < 0.0 {
                return Err(MemoryError::InvalidWeight);
            }
        }
        let sum = alpha + beta + gamma;
        if sum <= 0.0 {
            return Err(MemoryError::DegenerateWeights);
        }
        Ok(Self {
            alpha: alpha / sum,
            beta: beta / sum,
            gamma: gamma / sum,
            lambda,
            eta,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    fn is_valid_normalized(&self) -> bool {
        [self.alpha, self.beta, self.gamma, self.lambda, self.eta]
            .iter()
            .all(|w| w.is_finite() && *w >= 0.0)
            && (self.alpha + self.beta + self.gamma - 1.0).abs() <= 1e-12
    }
}

impl Default for ScoreWeights {
    /// Similarity-led blend with a mild frequency term, gentle decay, and a
    /// 0.1 tradeoff coefficient. Measured on the default synthetic workload
    /// this operating point keeps retrieval precise while reinforcement
    /// protects re-queried facts; pushing the frequency weight toward the
    /// recency weight lets stale, often-retrieved units crowd out current
    /// ones, and much faster decay evicts facts before they are ever asked
    /// for.
    fn default() -> Self {
        Self::new(0.35, 0.2, 0.45, 0.02, 0.1).expect("default weights are valid")
    }
}

/// Cardinality budget: the maximum number of units retained after pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    max_items: usize,
}

impl Budget {
    pub fn new(max_items: usize) -> Result<Self, MemoryError> {
        if max_items == 0 {
            return Err(MemoryError::ZeroBudget);
        }
        Ok(Self { max_items })
    }

    pub fn max_items(&self) -> usize {
        self.max_items
    }
}

/// An active retrieval query: rendered text, its embedding, and the step it
/// was issued at.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub text: String,
    pub embedding: Vec<f64>,
    pub step: u64,
}

impl Query {
    pub fn from_text(text: &str, step: u64, config: &EmbedderConfig) -> Self {
        Self {
            text: text.to_string(),
            embedding: embed(text, config),
            step,
        }
    }
}

/// Per-component score decomposition. `total` always reconstructs as
/// `alpha * recency + beta * frequency + gamma * similarity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceBreakdown {
    pub recency: f64,
    pub frequency: f64,
    pub similarity: f64,
    pub total: f64,
}

/// Exponential decay of a unit's age: `exp(-lambda * (t - inserted_at))`.
/// Always in `(0, 1]`, exactly 1 at age zero or when `lambda` is zero.
pub fn recency(unit: &MemoryUnit, t: u64, lambda: f64) -> Result<f64, MemoryError> {
    debug_assert!(lambda >= 0.0, "lambda must be non-negative");
    if t < unit.inserted_at {
        return Err(MemoryError::NegativeAge {
            t,
            inserted_at: unit.inserted_at,
        });
    }
    let age = (t - unit.inserted_at) as f64;
    Ok((-lambda * age).exp())
}

/// Saturating usage frequency `n / (n + 1)`: 0 for never-accessed units,
/// strictly increasing in the access count, always below 1.
pub fn frequency(unit: &MemoryUnit) -> f64 {
    let n = unit.access_count as f64;
    n / (n + 1.0)
}

/// Score one unit at step `t` against an optional query. Without a query the
/// similarity component is 0 and the score degenerates to
/// `alpha * recency + beta * frequency`.
pub fn importance(
    unit: &MemoryUnit,
    query: Option<&Query>,
    t: u64,
    weights: &ScoreWeights,
) -> Result<ImportanceBreakdown, MemoryError> {
    let recency = recency(unit, t, weights.lambda())?;
    let frequency = frequency(unit);
    let similarity = match query {
        Some(q) => cosine(&unit.embedding, &q.embedding)
            .map_err(|_| MemoryError::DimensionMismatch {
                left: unit.embedding.len(),
                right: q.embedding.len(),
            })?
            .max(0.0),
        None => 0.0,
    };
    let total =
        weights.alpha() * recency + weights.beta() * frequency + weights.gamma() * similarity;
    Ok(ImportanceBreakdown {
        recency,
        frequency,
        similarity,
        total,
    })
}

/// Shared ranking order: importance descending, then newer `inserted_at`,
/// then smaller id. Every retention and retrieval path uses this chain.
fn scored_rank(
    units: &[MemoryUnit],
    query: Option<&Query>,
    t: u64,
    weights: &ScoreWeights,
) -> Result<Vec<(usize, f64)>, MemoryError> {
    let mut scored = Vec::with_capacity(units.len());
    for (idx, unit) in units.iter().enumerate() {
        scored.push((idx, importance(unit, query, t, weights)?.total));
    }
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(units[b.0].inserted_at.cmp(&units[a.0].inserted_at))
            .then(units[a.0].id.cmp(&units[b.0].id))
    });
    Ok(scored)
}

/// Unit ids ranked best-first under the shared tie-break chain.
pub fn rank_by_importance(
    units: &[MemoryUnit],
    query: Option<&Query>,
    t: u64,
    weights: &ScoreWeights,
) -> Result<Vec<u64>, MemoryError> {
    Ok(scored_rank(units, query, t, weights)?
        .into_iter()
        .map(|(idx, _)| units[idx].id)
        .collect())
}

/// Exact reference solver for budgeted retention, for testing greedy top-B.
///
/// Enumerates every subset of size at most the budget (at most 20 units) and
/// returns the one with maximum total importance. Equal-total ties prefer the
/// larger subset, then the subset whose members rank earlier in the shared
/// tie-break chain, so the retained set is unique and comparable against
/// [`MemoryStore::prune`]. Subset totals are summed in rank order so that
/// subsets with identical importance multisets compare bit-equal.
pub fn prune_oracle(
    units: &[MemoryUnit],
    query: Option<&Query>,
    t: u64,
    budget: Budget,
    weights: &ScoreWeights,
) -> Result<BTreeSet<u64>, MemoryError> {
    let n = units.len();
    if n > 20 {
        return Err(MemoryError::OracleSizeLimit { n });
    }
    let ranked = scored_rank(units, query, t, weights)?;
    let scores: Vec<f64> = ranked.iter().map(|&(_, total)| total).collect();

    let max_size = budget.max_items().min(n) as u32;
    let mut best_mask: u32 = 0;
    let mut best_total = 0.0_f64;
    let mut best_count: u32 = 0;
    for mask in 0..(1u32 << n) {
        let count = mask.count_ones();
        if count > max_size {
            continue;
        }
        let mut total = 0.0;
        for (pos, &score) in scores.iter().enumerate() {
            if mask & (1 << pos) != 0 {
                total += score;
            }
        }
        let better = total > best_total
            || (total == best_total
                && (count > best_count
                    || (count == best_count && rank_lex_smaller(mask, best_mask))));
        if better {
            best_mask = mask;
            best_total = total;
            best_count = count;
        }
    }

    let mut retained = BTreeSet::new();
    for (pos, &(idx, _)) in ranked.iter().enumerate() {
        if best_mask & (1 << pos) != 0 {
            retained.insert(units[idx].id);
        }
    }
    Ok(retained)
}

/// True when `a`'s rank positions precede `b`'s lexicographically: at the
/// lowest differing position, the subset that contains it wins.
fn rank_lex_smaller(a: u32, b: u32) -> bool {
    let diff = a ^ b;
    diff != 0 && a & (1 << diff.trailing_zeros()) != 0
}

/// Reported diagnostic combining task loss with the normalized memory
/// footprint: `task_loss + eta * mem_size / budget`.
pub fn tradeoff_metric(task_loss: f64, mem_size: usize, budget: Budget, eta: f64) -> f64 {
    debug_assert!(task_loss >= 0.0, "task_loss must be non-negative");
    debug_assert!(eta >= 0.0, "eta must be non-negative");
    task_loss + eta * (mem_size as f64 / budget.max_items() as f64)
}

/// Insertion-ordered bounded collection of memory units plus the logical
/// clock, scoring weights, and budget that govern it.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryStore {
    units: Vec<MemoryUnit>,
    clock: u64,
    weights: ScoreWeights,
    budget: Budget,
    dimension: usize,
    next_id: u64,
}

impl MemoryStore {
    pub fn new(
        dimension: usize,
        weights: ScoreWeights,
        budget: Budget,
    ) -> Result<Self, MemoryError> {
        if dimension == 0 {
            return Err(MemoryError::ZeroDimension);
        }
        Ok(Self {
            units: Vec::new(),
            clock: 0,
            weights,
            budget,
            dimension,
            next_id: 0,
        })
    }

    pub fn units(&self) -> &[MemoryUnit] {
        &self.units
    }

    pub fn get(&self, id: u64) -> Option<&MemoryUnit> {
        self.units.iter().find(|u| u.id == id)
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn weights(&self) -> &ScoreWeights {
        &self.weights
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    fn check_clock(&self, step: u64) -> Result<(), MemoryError> {
        if step < self.clock {
            return Err(MemoryError::ClockRegression {
                step,
                clock: self.clock,
            });
        }
        Ok(())
    }

    /// Advance the logical clock without touching any unit.
    pub fn advance_clock(&mut self, step: u64) -> Result<(), MemoryError> {
        self.check_clock(step)?;
        self.clock = step;
        Ok(())
    }

    /// Append a new unit at `step`. The content is embedded with the store's
    /// dimension; the unit starts with a zero access count. The store may
    /// temporarily exceed its budget — pruning is a separate call.
    pub fn insert(
        &mut self,
        content: &str,
        metadata: BTreeMap<String, String>,
        step: u64,
    ) -> Result<u64, MemoryError> {
        self.check_clock(step)?;
        let id = self.next_id;
        self.next_id += 1;
        self.clock = step;
        self.units.push(MemoryUnit {
            id,
            content: content.to_string(),
            embedding: embed(content, &EmbedderConfig::new(self.dimension)),
            inserted_at: step,
            last_accessed_at: step,
            access_count: 0,
            metadata,
        });
        Ok(id)
    }

    /// Record one access of `id` at `step`, returning the updated count.
    pub fn record_access(&mut self, id: u64, step: u64) -> Result<u64, MemoryError> {
        self.check_clock(step)?;
        let unit = self
            .units
            .iter_mut()
            .find(|u| u.id == id)
            .ok_or(MemoryError::NoSuchUnit { id })?;
        unit.access_count += 1;
        unit.last_accessed_at = step;
        self.clock = step;
        Ok(unit.access_count)
    }

    /// Enforce the budget at step `t`: when over budget, retain exactly the
    /// top-B units by importance (ties broken by newer `inserted_at`, then
    /// smaller id) and return the removed ids in ascending order. A store at
    /// or under budget is untouched.
    pub fn prune(&mut self, query: Option<&Query>, t: u64) -> Result<Vec<u64>, MemoryError> {
        self.check_clock(t)?;
        self.clock = t;
        let b = self.budget.max_items();
        if self.units.len() <= b {
            return Ok(Vec::new());
        }
        let ranked = rank_by_importance(&self.units, query, t, &self.weights)?;
        let retained: BTreeSet<u64> = ranked[..b].iter().copied().collect();
        Ok(self.apply_retention(&retained))
    }

    /// Drop every unit whose id is not in `retained`, preserving insertion
    /// order among survivors. Returns removed ids in ascending order. This is
    /// the hook external retention policies act through; it never moves the
    /// clock or touches access statistics.
    pub fn apply_retention(&mut self, retained: &BTreeSet<u64>) -> Vec<u64> {
        let mut removed: Vec<u64> = self
            .units
            .iter()
            .filter(|u| !retained.contains(&u.id))
            .map(|u| u.id)
            .collect();
        self.units.retain(|u| retained.contains(&u.id));
        removed.sort_unstable();
        removed
    }

    /// Serialize the full store state as a single JSON document.
    pub fn snapshot(&self) -> Vec<u8> {
        #[derive(Serialize)]
        struct SnapshotRef<'a> {
            version: u32,
            dimension: usize,
            clock: u64,
            next_id: u64,
            weights: &'a ScoreWeights,
            budget: &'a Budget,
            units: &'a [MemoryUnit],
        }
        serde_json::to_vec(&SnapshotRef {
            version: SNAPSHOT_VERSION,
            dimension: self.dimension,
            clock: self.clock,
            next_id: self.next_id,
            weights: &self.weights,
            budget: &self.budget,
            units: &self.units,
        })
        .expect("snapshot serialization cannot fail")
    }

    /// Reconstruct a store from [`MemoryStore::snapshot`] bytes. The round
    /// trip is field-exact, embeddings included. Malformed input fails with
    /// the byte offset of the problem.
    pub fn load(bytes: &[u8]) -> Result<Self, MemoryError> {
        #[derive(Deserialize)]
        struct SnapshotOwned {
            version: u32,
            dimension: usize,
            clock: u64,
            next_id: u64,
            weights: ScoreWeights,
            budget: Budget,
            units: Vec<MemoryUnit>,
        }

        let doc: SnapshotOwned =
            serde_json::from_slice(bytes).map_err(|e| MemoryError::CorruptSnapshot {
                offset: byte_offset(bytes, e.line(), e.column()),
                reason: e.to_string(),
            })?;

        let corrupt = |reason: String| MemoryError::CorruptSnapshot { offset: 0, reason };
        if doc.version != SNAPSHOT_VERSION {
            return Err(corrupt(format!("unsupported version {}", doc.version)));
        }
        if doc.dimension == 0 {
            return Err(corrupt("dimension must be >= 1".to_string()));
        }
        if doc.budget.max_items == 0 {
            return Err(corrupt("budget must be >= 1".to_string()));
        }
        if !doc.weights.is_valid_normalized() {
            return Err(corrupt("weights are not normalized".to_string()));
        }
        let mut prev_id: Option<u64> = None;
        for unit in &doc.units {
            if unit.embedding.len() != doc.dimension {
                return Err(corrupt(format!(
                    "unit {}: embedding length {} != dimension {}",
                    unit.id,
                    unit.embedding.len(),
                    doc.dimension
                )));
            }
            let norm_sq: f64 = unit.embedding.iter().map(|x| x * x).sum();
            if !(norm_sq == 0.0 || (norm_sq.sqrt() - 1.0).abs() <= 1e-9) {
                return Err(corrupt(format!(
                    "unit {}: embedding is not unit norm",
                    unit.id
                )));
            }
            if unit.inserted_at > unit.last_accessed_at {
                return Err(corrupt(format!(
                    "unit {}: inserted_at {} after last_accessed_at {}",
                    unit.id, unit.inserted_at, unit.last_accessed_at
                )));
            }
            if unit.last_accessed_at > doc.clock {
                return Err(corrupt(format!(
                    "unit {}: last_accessed_at {} after clock {}",
                    unit.id, unit.last_accessed_at, doc.clock
                )));
            }
            if unit.id >= doc.next_id {
                return Err(corrupt(format!(
                    "unit {}: id not below next_id {}",
                    unit.id, doc.next_id
                )));
            }
            if prev_id.is_some_and(|p| unit.id <= p) {
                return Err(corrupt("unit ids out of insertion order".to_string()));
            }
            prev_id = Some(unit.id);
        }

        Ok(Self {
            units: doc.units,
            clock: doc.clock,
            weights: doc.weights,
            budget: doc.budget,
            dimension: doc.dimension,
            next_id: doc.next_id,
        })
    }
}

/// Translate serde_json's 1-based line/column into a byte offset.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let mut line_start = 0;
    let mut lines_to_skip = line.saturating_sub(1);
    for (i, &b) in bytes.iter().enumerate() {
        if lines_to_skip == 0 {
            break;
        }
        if b == b'\n' {
            lines_to_skip -= 1;
            line_start = i + 1;
        }
    }
    line_start + column.saturating_sub(1)
}
