//! Interchangeable retention policies for the replay loop.
//!
//! Every policy answers the same question: given the current units, an
//! optional active query, the step, and a budget, which ids survive? The
//! scored policy ranks by importance; the classical baselines rank by a
//! single bookkeeping field; `random` samples; `none` never evicts. All
//! bounded policies retain exactly `min(|units|, B)` units and break ties
//! with the same chain the scored ranking uses (newer insertion first, then
//! smaller id), so retained sets are deterministic everywhere.

use std::collections::BTreeSet;

use crate::memory::{rank_by_importance, Budget, MemoryError, MemoryUnit, Query, ScoreWeights};
use crate::rng::SplitMix64;

/// Names accepted on the command line and echoed into report rows.
pub const POLICY_NAMES: [&str; 7] = [
    "abf",
    "fifo",
    "lru",
    "lfu",
    "random",
    "none",
    "recency_only",
];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("unknown policy '{name}' (valid: abf, fifo, lru, lfu, random, none, recency_only)")]
    UnknownPolicy { name: String },
}

/// Policy selector plus its parameters. `recency_only` is the scored policy
/// with beta and gamma forced to zero (alpha normalizes to 1), keeping the
/// configured decay rate.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyId {
    Abf { weights: ScoreWeights },
    Fifo,
    Lru,
    Lfu,
    Random { seed: u64 },
    None,
    RecencyOnly { weights: ScoreWeights },
}

impl PolicyId {
    /// Resolve a command-line policy name. `weights` parameterizes `abf` and
    /// `recency_only`; `seed` parameterizes `random`; the rest ignore both.
    pub fn from_name(name: &str, weights: ScoreWeights, seed: u64) -> Result<Self, PolicyError> {
        match name {
            "abf" => Ok(Self::Abf { weights }),
            "fifo" => Ok(Self::Fifo),
            "lru" => Ok(Self::Lru),
            "lfu" => Ok(Self::Lfu),
            "random" => Ok(Self::Random { seed }),
            "none" => Ok(Self::None),
            "recency_only" => Ok(Self::recency_only(weights)),
            _ => Err(PolicyError::UnknownPolicy {
                name: name.to_string(),
            }),
        }
    }

    /// The scored policy reduced to its decay component.
    pub fn recency_only(weights: ScoreWeights) -> Self {
        let reduced = ScoreWeights::new(1.0, 0.0, 0.0, weights.lambda(), weights.eta())
            .expect("alpha = 1 is always valid");
        Self::RecencyOnly { weights: reduced }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Abf { .. } => "abf",
            Self::Fifo => "fifo",
            Self::Lru => "lru",
            Self::Lfu => "lfu",
            Self::Random { .. } => "random",
            Self::None => "none",
            Self::RecencyOnly { .. } => "recency_only",
        }
    }

    /// Every policy except `none` enforces the budget.
    pub fn is_bounded(&self) -> bool {
        !matches!(self, Self::None)
    }
}

/// Runtime state for one replay: the policy id plus the seeded generator the
/// random baseline advances across calls. Owned by a single replay thread.
#[derive(Debug, Clone)]
pub struct Policy {
    id: PolicyId,
    rng: SplitMix64,
}

impl Policy {
    pub fn new(id: PolicyId) -> Self {
        let rng = match &id {
            PolicyId::Random { seed } => SplitMix64::new(*seed),
            _ => SplitMix64::new(0),
        };
        Self { id, rng }
    }

    pub fn id(&self) -> &PolicyId {
        &self.id
    }

    /// Ids to retain. Bounded policies return exactly `min(|units|, B)` ids;
    /// `none` returns everything.
    pub fn select_retained(
        &mut self,
        units: &[MemoryUnit],
        query: Option<&Query>,
        t: u64,
        budget: Budget,
    ) -> Result<BTreeSet<u64>, MemoryError> {
        let keep = budget.max_items().min(units.len());
        match &self.id {
            PolicyId::None => Ok(units.iter().map(|u| u.id).collect()),
            PolicyId::Abf { weights } | PolicyId::RecencyOnly { weights } => {
                let ranked = rank_by_importance(units, query, t, weights)?;
                Ok(ranked[..keep].iter().copied().collect())
            }
            PolicyId::Fifo => Ok(top_by_key(units, keep, |u| u.inserted_at)),
            PolicyId::Lru => Ok(top_by_key(units, keep, |u| u.last_accessed_at)),
            PolicyId::Lfu => Ok(top_by_key(units, keep, |u| u.access_count)),
            PolicyId::Random { .. } => Ok(self.sample_retained(units, keep)),
        }
    }

    /// Uniform size-`keep` subset via partial Fisher-Yates over the units in
    /// insertion order, driven by the policy's own generator.
    fn sample_retained(&mut self, units: &[MemoryUnit], keep: usize) -> BTreeSet<u64> {
        let mut indices: Vec<usize> = (0..units.len()).collect();
        for i in 0..keep {
            let j = i + self.rng.next_below((units.len() - i) as u64) as usize;
            indices.swap(i, j);
        }
        indices[..keep].iter().map(|&i| units[i].id).collect()
    }
}

/// The `keep` units with the largest primary key, ties broken by newer
/// `inserted_at`, then smaller id.
fn top_by_key<K, F>(units: &[MemoryUnit], keep: usize, key: F) -> BTreeSet<u64>
where
    K: Ord,
    F: Fn(&MemoryUnit) -> K,
{
    let mut order: Vec<&MemoryUnit> = units.iter().collect();
    order.sort_by(|a, b| {
        key(b)
            .cmp(&key(a))
            .then(b.inserted_at.cmp(&a.inserted_at))
            .then(a.id.cmp(&b.id))
    });
    order[..keep].iter().map(|u| u.id).collect()
}
