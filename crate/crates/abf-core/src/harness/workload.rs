//! Seeded synthetic workload generation.
//!
//! Each step draws an event kind by the configured rates; the residual
//! probability emits a genuine observe. Facts are key/value pairs rendered to
//! natural text ("the hotel name is seagull"); updates rebind an existing key
//! and bump its version; queries target existing keys with a recency bias so
//! that retrieval relevance correlates with the scoring components;
//! distractors are observes of throwaway keys that are never queried.
//!
//! Everything is drawn from one SplitMix64 stream, so a (config, seed) pair
//! yields a byte-identical trace on every platform.

use super::trace::{Trace, TraceEvent, WorkloadConfig};
use super::HarnessError;
use crate::rng::SplitMix64;

/// Probability of stepping one key deeper into the recency-ordered key list
/// when picking a recency-biased query target.
const QUERY_GO_DEEPER: f64 = 0.85;

/// Share of queries that instead revisit a uniformly chosen known key, old
/// or new; this is what makes long-dormant facts matter late in a trace.
const QUERY_REVISIT: f64 = 0.3;

/// Probability of stepping one key deeper when choosing the target of an
/// update or a restating observe. Touches concentrate on recently active
/// keys, so untouched keys genuinely go cold instead of being kept warm.
const TOUCH_GO_DEEPER: f64 = 0.85;

/// Probability that a genuine observe introduces a new key while
/// unintroduced keys remain (otherwise it restates an existing fact).
const INTRODUCE_NEW_KEY: f64 = 0.5;

const SYLLABLES: [&str; 16] = [
    "ba", "de", "ki", "mo", "ru", "sa", "ta", "ve", "zo", "pa", "ne", "lu", "ga", "hi", "fo", "cy",
];

/// Deterministic pronounceable word for an index: the base-16 syllable
/// expansion of `n`, padded to at least two syllables. Injective, so disjoint
/// index ranges yield disjoint words.
fn word(n: u64) -> String {
    let mut digits = Vec::new();
    let mut v = n;
    loop {
        digits.push((v % 16) as usize);
        v /= 16;
        if v == 0 {
            break;
        }
    }
    while digits.len() < 2 {
        digits.push(0);
    }
    digits.iter().rev().map(|&d| SYLLABLES[d]).collect()
}

// Word-index classes mod 8 keep genuine key words, distractor noise words,
// and values in disjoint namespaces for every parameter choice, so a
// distractor key can never collide with a genuine key.
fn genuine_key_word(i: u64) -> String {
    word(8 * i)
}

fn genuine_key_name(i: u64) -> String {
    format!("{} {}", word(8 * i), word(8 * i + 1))
}

fn distractor_noise_word(d: u64) -> String {
    word(8 * d + 2)
}

fn value_word(v: u64) -> String {
    word(8 * v + 4)
}

struct FactState {
    key_index: u64,
    name: String,
    value_index: u64,
    version: u64,
}

impl FactState {
    fn value(&self) -> String {
        value_word(self.value_index)
    }
}

struct Generator {
    config: WorkloadConfig,
    rng: SplitMix64,
    facts: Vec<FactState>,
    /// Indexes into `facts`, most recently touched (observed/updated) first.
    recency: Vec<usize>,
    next_key: u64,
    next_distractor: u64,
}

impl Generator {
    fn new(config: WorkloadConfig) -> Self {
        let rng = SplitMix64::new(config.seed);
        Self {
            config,
            rng,
            facts: Vec::new(),
            recency: Vec::new(),
            next_key: 0,
            next_distractor: 0,
        }
    }

    fn draw_value_index(&mut self) -> u64 {
        self.rng.next_below(self.config.vocab.max(1))
    }

    fn touch(&mut self, fact_index: usize) {
        self.recency.retain(|&i| i != fact_index);
        self.recency.insert(0, fact_index);
    }

    /// Geometric walk down the recency list: most recently touched keys are
    /// likeliest, with tail mass controlled by `go_deeper`.
    fn recency_biased_pick(&mut self, go_deeper: f64) -> usize {
        let mut depth = 0;
        while depth + 1 < self.recency.len() && self.rng.next_f64() < go_deeper {
            depth += 1;
        }
        self.recency[depth]
    }

    fn emit(&mut self, step: u64) -> TraceEvent {
        let draw = self.rng.next_f64();
        let update_cut = self.config.update_rate;
        let query_cut = update_cut + self.config.query_rate;
        let distractor_cut = query_cut + self.config.distractor_rate;

        if draw < update_cut && !self.facts.is_empty() {
            self.emit_update(step)
        } else if draw < query_cut && draw >= update_cut && !self.facts.is_empty() {
            self.emit_query(step)
        } else if (query_cut..distractor_cut).contains(&draw) {
            self.emit_distractor(step)
        } else {
            // Genuine observe, and the fallback for updates and queries drawn
            // before any key exists.
            self.emit_observe(step)
        }
    }

    fn emit_observe(&mut self, step: u64) -> TraceEvent {
        let can_introduce = self.next_key < self.config.keys;
        if !can_introduce && self.facts.is_empty() {
            // No genuine key can ever exist (keys = 0); degrade to noise.
            return self.emit_distractor(step);
        }
        let introduce =
            can_introduce && (self.facts.is_empty() || self.rng.next_f64() < INTRODUCE_NEW_KEY);
        if introduce {
            let key_index = self.next_key;
            let name = genuine_key_name(key_index);
            self.next_key += 1;
            let value_index = self.draw_value_index();
            let fact_index = self.facts.len();
            self.facts.push(FactState {
                key_index,
                name: name.clone(),
                value_index,
                version: 1,
            });
            self.touch(fact_index);
            TraceEvent::observe(step, &name, &value_word(value_index), 1)
        } else {
            let fact_index = self.recency_biased_pick(TOUCH_GO_DEEPER);
            self.touch(fact_index);
            let fact = &self.facts[fact_index];
            TraceEvent::observe(step, &fact.name, &fact.value(), fact.version)
        }
    }

    fn emit_update(&mut self, step: u64) -> TraceEvent {
        let fact_index = self.recency_biased_pick(TOUCH_GO_DEEPER);
        // Uniform over the pool excluding the current value, when possible.
        let vocab = self.config.vocab.max(1);
        let current = self.facts[fact_index].value_index;
        let value_index = if vocab > 1 {
            let draw = self.rng.next_below(vocab - 1);
            if draw >= current {
                draw + 1
            } else {
                draw
            }
        } else {
            current
        };
        let fact = &mut self.facts[fact_index];
        fact.version += 1;
        fact.value_index = value_index;
        let event = TraceEvent::update(step, &fact.name, &fact.value(), fact.version);
        self.touch(fact_index);
        event
    }

    fn emit_query(&mut self, step: u64) -> TraceEvent {
        let fact_index = if self.rng.next_f64() < QUERY_REVISIT {
            self.rng.next_below(self.facts.len() as u64) as usize
        } else {
            self.recency_biased_pick(QUERY_GO_DEEPER)
        };
        let fact = &self.facts[fact_index];
        TraceEvent::query(step, &fact.name, &fact.value())
    }

    /// A near-miss fact: its key borrows the first word of some genuine key
    /// but pairs it with a fresh noise word, so it reads like a confusable
    /// statement yet is never queried or updated.
    fn emit_distractor(&mut self, step: u64) -> TraceEvent {
        let noise = distractor_noise_word(self.next_distractor);
        self.next_distractor += 1;
        let first = if self.facts.is_empty() {
            word(8 * self.next_distractor + 3)
        } else {
            let fact_index = self.rng.next_below(self.facts.len() as u64) as usize;
            genuine_key_word(self.facts[fact_index].key_index)
        };
        let name = format!("{first} {noise}");
        let value_index = self.draw_value_index();
        TraceEvent::observe(step, &name, &value_word(value_index), 1)
    }
}

/// Generate a deterministic trace for `config`.
pub fn generate_workload(config: &WorkloadConfig) -> Result<Trace, HarnessError> {
    config.validate()?;
    let mut generator = Generator::new(config.clone());
    let mut events = Vec::with_capacity(config.steps as usize);
    for step in 1..=config.steps {
        events.push(generator.emit(step));
    }
    Ok(Trace {
        config: config.clone(),
        events,
    })
}
