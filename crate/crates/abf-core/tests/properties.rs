//! Property-based invariant tests: the scoring identities, the greedy/oracle
//! equivalence for budgeted retention, policy contracts, and snapshot
//! round trips, over randomized inputs.

use std::collections::BTreeMap;

use proptest::prelude::*;

use abf_core::{
    embedding::{cosine, embed, tokenize, EmbedderConfig},
    generate_workload, importance, prune_oracle, rank_by_importance, replay, Budget, MemoryStore,
    MemoryUnit, Policy, PolicyId, Query, ScoreWeights, WorkloadConfig,
};

const DIM: usize = 8;

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        raw
    } else {
        raw.into_iter().map(|x| x / norm).collect()
    }
}

fn make_units(params: Vec<(Vec<f64>, u64, u64)>) -> Vec<MemoryUnit> {
    params
        .into_iter()
        .enumerate()
        .map(|(id, (raw, inserted_at, access_count))| MemoryUnit {
            id: id as u64,
            content: String::new(),
            embedding: normalized(raw),
            inserted_at,
            last_accessed_at: inserted_at,
            access_count,
            metadata: BTreeMap::new(),
        })
        .collect()
}

fn unit_params() -> impl Strategy<Value = (Vec<f64>, u64, u64)> {
    (
        prop::collection::vec(-1.0f64..1.0, DIM),
        0u64..100,
        0u64..10,
    )
}

fn arb_weights() -> impl Strategy<Value = ScoreWeights> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..0.2)
        .prop_filter("component sum must be positive", |(a, b, g, _)| {
            a + b + g > 1e-3
        })
        .prop_map(|(a, b, g, l)| ScoreWeights::new(a, b, g, l, 0.1).unwrap())
}

fn arb_query() -> impl Strategy<Value = Option<Query>> {
    prop::option::of(
        prop::collection::vec(-1.0f64..1.0, DIM).prop_map(|raw| Query {
            text: String::new(),
            embedding: normalized(raw),
            step: 1000,
        }),
    )
}

fn words() -> impl Strategy<Value = String> {
    proptest::string::string_regex("[a-z]{1,6}( [a-z]{1,6}){0,4}").unwrap()
}

proptest! {
    /// Nonempty-token embeddings are unit vectors; tokenless text embeds to
    /// zero; token order never matters.
    #[test]
    fn embedding_norm_and_order_invariance(tokens in prop::collection::vec("[a-z0-9]{1,8}", 0..12)) {
        let config = EmbedderConfig::default();
        let text = tokens.join(" ");
        let vector = embed(&text, &config);
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if tokens.is_empty() {
            prop_assert!(vector.iter().all(|&x| x == 0.0));
        } else {
            prop_assert!((norm - 1.0).abs() <= 1e-9);
        }

        let mut reversed = tokens.clone();
        reversed.reverse();
        prop_assert_eq!(vector, embed(&reversed.join("  , "), &config));
    }

    /// Cosine over hashed count vectors is symmetric and lands in [0, 1].
    #[test]
    fn cosine_symmetry_and_range(a in words(), b in words()) {
        let config = EmbedderConfig::default();
        let va = embed(&a, &config);
        let vb = embed(&b, &config);
        let ab = cosine(&va, &vb).unwrap();
        let ba = cosine(&vb, &va).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    /// Tokenization yields only lowercase ASCII alphanumeric fragments.
    #[test]
    fn tokens_are_lowercase_alphanumeric(text in ".{0,60}") {
        for token in tokenize(&text) {
            prop_assert!(!token.is_empty());
            prop_assert!(token.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()));
        }
    }

    /// The reported total always reconstructs from the weighted components.
    #[test]
    fn importance_total_reconstructs(
        params in unit_params(),
        query in arb_query(),
        weights in arb_weights(),
    ) {
        let units = make_units(vec![params]);
        let breakdown = importance(&units[0], query.as_ref(), 1000, &weights).unwrap();
        let reconstructed = weights.alpha() * breakdown.recency
            + weights.beta() * breakdown.frequency
            + weights.gamma() * breakdown.similarity;
        prop_assert!((breakdown.total - reconstructed).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&breakdown.recency));
        prop_assert!((0.0..1.0).contains(&breakdown.frequency));
        prop_assert!((0.0..=1.0).contains(&breakdown.similarity));
    }

    /// Greedy top-B retention matches the brute-force subset oracle: same
    /// retained ids, same total importance.
    #[test]
    fn greedy_matches_subset_oracle(
        params in prop::collection::vec(unit_params(), 1..=16),
        budget in 1usize..=8,
        query in arb_query(),
        weights in arb_weights(),
    ) {
        let units = make_units(params);
        let budget = Budget::new(budget).unwrap();
        let keep = budget.max_items().min(units.len());

        let ranked = rank_by_importance(&units, query.as_ref(), 1000, &weights).unwrap();
        let greedy: std::collections::BTreeSet<u64> = ranked[..keep].iter().copied().collect();
        let oracle = prune_oracle(&units, query.as_ref(), 1000, budget, &weights).unwrap();
        prop_assert_eq!(&greedy, &oracle);

        let total = |ids: &std::collections::BTreeSet<u64>| -> f64 {
            units
                .iter()
                .filter(|u| ids.contains(&u.id))
                .map(|u| importance(u, query.as_ref(), 1000, &weights).unwrap().total)
                .sum()
        };
        prop_assert!((total(&greedy) - total(&oracle)).abs() <= 1e-9);
    }

    /// Scaling (alpha, beta, gamma) by a common positive factor before
    /// normalization never changes the retained set.
    #[test]
    fn weight_scaling_preserves_retention(
        params in prop::collection::vec(unit_params(), 1..=12),
        budget in 1usize..=8,
        query in arb_query(),
        (a, b, g) in (0.01f64..1.0, 0.01f64..1.0, 0.01f64..1.0),
    ) {
        let units = make_units(params);
        let keep = budget.min(units.len());
        for scale in [0.1, 3.0, 100.0] {
            let base = ScoreWeights::new(a, b, g, 0.05, 0.1).unwrap();
            let scaled = ScoreWeights::new(scale * a, scale * b, scale * g, 0.05, 0.1).unwrap();
            let lhs = rank_by_importance(&units, query.as_ref(), 1000, &base).unwrap();
            let rhs = rank_by_importance(&units, query.as_ref(), 1000, &scaled).unwrap();
            let lhs: std::collections::BTreeSet<u64> = lhs[..keep].iter().copied().collect();
            let rhs: std::collections::BTreeSet<u64> = rhs[..keep].iter().copied().collect();
            prop_assert_eq!(lhs, rhs, "scale {}", scale);
        }
    }

    /// Bounded policies retain exactly min(|units|, B) ids, always a subset
    /// of the input, deterministically.
    #[test]
    fn policy_cardinality_subset_determinism(
        params in prop::collection::vec(unit_params(), 0..=12),
        budget in 1usize..=8,
        query in arb_query(),
        seed in any::<u64>(),
    ) {
        let units = make_units(params);
        let budget = Budget::new(budget).unwrap();
        let ids: Vec<PolicyId> = vec![
            PolicyId::Abf { weights: ScoreWeights::default() },
            PolicyId::Fifo,
            PolicyId::Lru,
            PolicyId::Lfu,
            PolicyId::Random { seed },
            PolicyId::recency_only(ScoreWeights::default()),
        ];
        for id in ids {
            let mut first = Policy::new(id.clone());
            let mut second = Policy::new(id);
            let lhs = first.select_retained(&units, query.as_ref(), 1000, budget).unwrap();
            let rhs = second.select_retained(&units, query.as_ref(), 1000, budget).unwrap();
            prop_assert_eq!(&lhs, &rhs);
            prop_assert_eq!(lhs.len(), budget.max_items().min(units.len()));
            prop_assert!(lhs.iter().all(|id| units.iter().any(|u| u.id == *id)));
        }
    }

    /// With equal access counts and no active query, the decay-only scored
    /// policy retains exactly the FIFO set.
    #[test]
    fn recency_only_reduces_to_fifo(
        inserted in prop::collection::vec(0u64..1000, 1..=10),
        budget in 1usize..=10,
        access_count in 0u64..5,
    ) {
        let units: Vec<MemoryUnit> = inserted
            .iter()
            .enumerate()
            .map(|(id, &at)| MemoryUnit {
                id: id as u64,
                content: String::new(),
                embedding: vec![0.0; DIM],
                inserted_at: at,
                last_accessed_at: at,
                access_count,
                metadata: BTreeMap::new(),
            })
            .collect();
        let budget = Budget::new(budget).unwrap();
        let mut scored = Policy::new(PolicyId::recency_only(ScoreWeights::default()));
        let mut fifo = Policy::new(PolicyId::Fifo);
        let lhs = scored.select_retained(&units, None, 1000, budget).unwrap();
        let rhs = fifo.select_retained(&units, None, 1000, budget).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    /// Snapshot/load is a field-exact round trip for stores built through
    /// the public mutation surface.
    #[test]
    fn snapshot_round_trip_is_identity(
        contents in prop::collection::vec(words(), 0..10),
        step_gaps in prop::collection::vec(0u64..5, 0..10),
        accesses in prop::collection::vec((0usize..10, 0u64..4), 0..8),
        budget in 1usize..50,
    ) {
        let mut store = MemoryStore::new(
            256,
            ScoreWeights::default(),
            Budget::new(budget).unwrap(),
        )
        .unwrap();
        let mut step = 0;
        for (i, content) in contents.iter().enumerate() {
            step += step_gaps.get(i).copied().unwrap_or(1);
            let mut metadata = BTreeMap::new();
            metadata.insert("fact_key".to_string(), content.clone());
            metadata.insert("fact_version".to_string(), i.to_string());
            store.insert(content, metadata, step).unwrap();
        }
        for (slot, gap) in accesses {
            if store.is_empty() {
                break;
            }
            let id = store.units()[slot % store.len()].id;
            step += gap;
            store.record_access(id, step).unwrap();
        }
        let restored = MemoryStore::load(&store.snapshot()).unwrap();
        prop_assert_eq!(restored, store);
    }

    /// Without pruning, k inserts leave exactly k units.
    #[test]
    fn insert_only_growth_is_exact(count in 0usize..40) {
        let mut store = MemoryStore::new(
            16,
            ScoreWeights::default(),
            Budget::new(1).unwrap(),
        )
        .unwrap();
        for step in 0..count {
            store.insert("x", BTreeMap::new(), step as u64).unwrap();
        }
        prop_assert_eq!(store.len(), count);
    }
}

/// Decay is strictly decreasing in age for fixed lambda, strictly decreasing
/// in lambda for fixed positive age, and exactly 1 at age zero.
#[test]
fn decay_monotonicity_grid() {
    let unit = |inserted_at: u64| MemoryUnit {
        id: 0,
        content: String::new(),
        embedding: vec![0.0; 4],
        inserted_at,
        last_accessed_at: inserted_at,
        access_count: 0,
        metadata: BTreeMap::new(),
    };
    let u = unit(0);
    assert_eq!(abf_core::recency(&u, 0, 0.7).unwrap(), 1.0);

    let mut prev = f64::INFINITY;
    for age in 0..1000u64 {
        let r = abf_core::recency(&u, age, 0.05).unwrap();
        assert!(r < prev, "not strictly decreasing at age {age}");
        prev = r;
    }

    let mut prev = f64::INFINITY;
    for i in 1..=1000 {
        let lambda = i as f64 * 1e-3;
        let r = abf_core::recency(&u, 10, lambda).unwrap();
        assert!(r < prev, "not strictly decreasing at lambda {lambda}");
        prev = r;
    }
}

/// frequency(n + 1) > frequency(n), bounded in [0, 1).
#[test]
fn frequency_strictly_increases() {
    let mut unit = MemoryUnit {
        id: 0,
        content: String::new(),
        embedding: vec![0.0; 4],
        inserted_at: 0,
        last_accessed_at: 0,
        access_count: 0,
        metadata: BTreeMap::new(),
    };
    let mut prev = -1.0;
    for n in 0..200 {
        unit.access_count = n;
        let f = abf_core::frequency(&unit);
        assert!(f > prev);
        assert!((0.0..1.0).contains(&f));
        prev = f;
    }
}

/// Traces generated without updates can never produce a false memory, under
/// any policy.
#[test]
fn fmr_zero_law_on_update_free_traces() {
    let weights = ScoreWeights::default();
    for seed in 0..4u64 {
        let trace = generate_workload(&WorkloadConfig {
            steps: 400,
            update_rate: 0.0,
            seed,
            ..WorkloadConfig::default()
        })
        .unwrap();
        for policy in [
            PolicyId::Abf { weights },
            PolicyId::Fifo,
            PolicyId::Lru,
            PolicyId::Lfu,
            PolicyId::Random { seed: 9 },
            PolicyId::None,
            PolicyId::recency_only(weights),
        ] {
            let report = replay(&trace, &policy, &weights, Budget::new(16).unwrap(), 4).unwrap();
            assert_eq!(report.fmr, 0.0, "policy {}", report.policy);
        }
    }
}
