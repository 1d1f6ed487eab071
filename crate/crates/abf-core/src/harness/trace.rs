//! Trace schema and JSONL serialization.
//!
//! A trace file is one JSON header line `{"trace_version":1,"config":{...}}`
//! followed by one event object per line. Steps are logical and strictly
//! increasing; every update refers to a previously observed key; every query
//! carries the value of its key's highest version at that point.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Observe,
    Update,
    Query,
    Tick,
}

/// One workload step. Field presence depends on the kind: `tick` carries the
/// step only; `query` has no value; observe/update carry key, value, and the
/// fact's version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u64>,
}

/// Rendered statement form of a fact, as stored in memory.
pub fn fact_text(key: &str, value: &str) -> String {
    format!("the {key} is {value}")
}

/// Rendered question form of a fact key, as embedded for retrieval.
pub fn question_text(key: &str) -> String {
    format!("what is the {key}")
}

impl TraceEvent {
    pub fn observe(step: u64, key: &str, value: &str, version: u64) -> Self {
        Self {
            step,
            kind: EventKind::Observe,
            key: Some(key.to_string()),
            value: Some(value.to_string()),
            text: Some(fact_text(key, value)),
            expected_value: None,
            version: Some(version),
        }
    }

    pub fn update(step: u64, key: &str, value: &str, version: u64) -> Self {
        Self {
            kind: EventKind::Update,
            ..Self::observe(step, key, value, version)
        }
    }

    pub fn query(step: u64, key: &str, expected_value: &str) -> Self {
        Self {
            step,
            kind: EventKind::Query,
            key: Some(key.to_string()),
            value: None,
            text: Some(question_text(key)),
            expected_value: Some(expected_value.to_string()),
            version: None,
        }
    }

    pub fn tick(step: u64) -> Self {
        Self {
            step,
            kind: EventKind::Tick,
            key: None,
            value: None,
            text: None,
            expected_value: None,
            version: None,
        }
    }
}

/// Workload generator parameters. The residual probability
/// `1 - update_rate - query_rate - distractor_rate` emits genuine observes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub steps: u64,
    pub keys: u64,
    pub update_rate: f64,
    pub query_rate: f64,
    pub distractor_rate: f64,
    pub stages: u64,
    pub seed: u64,
    pub vocab: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            steps: 5000,
            keys: 40,
            update_rate: 0.15,
            query_rate: 0.2,
            distractor_rate: 0.3,
            stages: 6,
            seed: 1,
            vocab: 500,
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        for (name, value) in [
            ("update_rate", self.update_rate),
            ("query_rate", self.query_rate),
            ("distractor_rate", self.distractor_rate),
        ] {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(HarnessError::InvalidRate { name, value });
            }
        }
        let sum = self.update_rate + self.query_rate + self.distractor_rate;
        if sum > 1.0 {
            return Err(HarnessError::RatesExceedOne { sum });
        }
        if self.stages == 0 {
            return Err(HarnessError::ZeroStages);
        }
        Ok(())
    }
}

/// A generated (or hand-built) workload: the config that describes it plus
/// its event sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub config: WorkloadConfig,
    pub events: Vec<TraceEvent>,
}

#[derive(Serialize, Deserialize)]
struct TraceHeader {
    trace_version: u32,
    config: WorkloadConfig,
}

/// Write a trace as JSONL: header line, then one event per line.
pub fn write_jsonl<W: Write>(trace: &Trace, mut writer: W) -> std::io::Result<()> {
    let header = TraceHeader {
        trace_version: TRACE_VERSION,
        config: trace.config.clone(),
    };
    serde_json::to_writer(&mut writer, &header)?;
    writer.write_all(b"\n")?;
    for event in &trace.events {
        serde_json::to_writer(&mut writer, event)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a JSONL trace, failing with the 1-based line number of any problem.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Trace, HarnessError> {
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or(HarnessError::TraceRead {
            line: 1,
            reason: "missing header line".to_string(),
        })?
        .map_err(|e| HarnessError::TraceRead {
            line: 1,
            reason: e.to_string(),
        })?;
    let header: TraceHeader =
        serde_json::from_str(&header_line).map_err(|e| HarnessError::TraceRead {
            line: 1,
            reason: e.to_string(),
        })?;
    if header.trace_version != TRACE_VERSION {
        return Err(HarnessError::TraceRead {
            line: 1,
            reason: format!("unsupported trace_version {}", header.trace_version),
        });
    }

    let mut events = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| HarnessError::TraceRead {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.is_empty() {
            continue;
        }
        let event: TraceEvent =
            serde_json::from_str(&line).map_err(|e| HarnessError::TraceRead {
                line: line_no,
                reason: e.to_string(),
            })?;
        events.push(event);
    }
    Ok(Trace {
        config: header.config,
        events,
    })
}
