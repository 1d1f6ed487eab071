//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use abf_core::{
    embedding::{embed, EmbedderConfig},
    generate_workload, importance, read_jsonl, replay_outcome, write_jsonl, Budget, EventKind,
    HarnessError, MemoryError, MemoryStore, MemoryUnit, MetricsReport, PolicyId, Query,
    ScoreWeights, Trace, WorkloadConfig, CSV_HEADER,
};

use crate::manifest::{resolve, FileConfig};
use crate::{CliError, CompareArgs, RunArgs, ScoreArgs, ScoringFlags, WorkloadFlags};

fn map_memory(e: MemoryError) -> CliError {
    match e {
        MemoryError::ZeroDimension
        | MemoryError::DegenerateWeights
        | MemoryError::InvalidWeight
        | MemoryError::ZeroBudget
        | MemoryError::NegativeAge { .. }
        | MemoryError::DimensionMismatch { .. }
        | MemoryError::OracleSizeLimit { .. } => CliError::Usage(e.to_string()),
        _ => CliError::Data(e.to_string()),
    }
}

fn map_harness(e: HarnessError) -> CliError {
    match e {
        HarnessError::InvalidRate { .. }
        | HarnessError::RatesExceedOne { .. }
        | HarnessError::ZeroStages
        | HarnessError::ZeroK => CliError::Usage(e.to_string()),
        HarnessError::Memory(m) => map_memory(m),
        _ => CliError::Data(e.to_string()),
    }
}

fn resolve_weights(flags: &ScoringFlags, file: &FileConfig) -> Result<ScoreWeights, CliError> {
    let defaults = ScoreWeights::default();
    ScoreWeights::new(
        resolve(flags.alpha, file.alpha, defaults.alpha()),
        resolve(flags.beta, file.beta, defaults.beta()),
        resolve(flags.gamma, file.gamma, defaults.gamma()),
        resolve(flags.lambda, file.lambda, defaults.lambda()),
        resolve(flags.eta, file.eta, defaults.eta()),
    )
    .map_err(|e| CliError::Usage(e.to_string()))
}

fn resolve_workload(flags: &WorkloadFlags, file: &FileConfig) -> WorkloadConfig {
    let defaults = WorkloadConfig::default();
    WorkloadConfig {
        steps: resolve(flags.steps, file.steps, defaults.steps),
        keys: resolve(flags.keys, file.keys, defaults.keys),
        update_rate: resolve(flags.update_rate, file.update_rate, defaults.update_rate),
        query_rate: resolve(flags.query_rate, file.query_rate, defaults.query_rate),
        distractor_rate: resolve(
            flags.distractor_rate,
            file.distractor_rate,
            defaults.distractor_rate,
        ),
        stages: resolve(flags.stages, file.stages, defaults.stages),
        seed: resolve(flags.seed, file.seed, defaults.seed),
        vocab: resolve(flags.vocab, file.vocab, defaults.vocab),
    }
}

fn resolve_budget(flag: Option<usize>, file: &FileConfig) -> Result<Budget, CliError> {
    Budget::new(resolve(flag, file.budget, 128)).map_err(|e| CliError::Usage(e.to_string()))
}

fn resolve_k(flag: Option<usize>, file: &FileConfig) -> Result<usize, CliError> {
    let k = resolve(flag, file.k, 5);
    if k == 0 {
        return Err(CliError::Usage("k must be >= 1".to_string()));
    }
    Ok(k)
}

fn echo_manifest(value: serde_json::Value) {
    eprintln!("manifest: {value}");
}

fn weights_json(weights: &ScoreWeights) -> serde_json::Value {
    serde_json::json!({
        "alpha": weights.alpha(),
        "beta": weights.beta(),
        "gamma": weights.gamma(),
        "lambda": weights.lambda(),
        "eta": weights.eta(),
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn read_trace(path: &Path) -> Result<Trace, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    read_jsonl(BufReader::new(file)).map_err(map_harness)
}

pub fn gen(flags: &WorkloadFlags, out: &Path, file: &FileConfig) -> Result<(), CliError> {
    let config = resolve_workload(flags, file);
    config.validate().map_err(map_harness)?;
    echo_manifest(serde_json::json!({
        "command": "gen",
        "config": config,
        "out": out.display().to_string(),
    }));

    let trace = generate_workload(&config).map_err(map_harness)?;
    let handle = fs::File::create(out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out.display())))?;
    let mut writer = BufWriter::new(handle);
    write_jsonl(&trace, &mut writer)
        .and_then(|()| writer.flush())
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", out.display())))?;

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for event in &trace.events {
        let name = match event.kind {
            EventKind::Observe => "observe",
            EventKind::Update => "update",
            EventKind::Query => "query",
            EventKind::Tick => "tick",
        };
        *counts.entry(name).or_default() += 1;
    }
    println!(
        "wrote {} events ({} observe, {} update, {} query, {} tick) to {}",
        trace.events.len(),
        counts.get("observe").copied().unwrap_or(0),
        counts.get("update").copied().unwrap_or(0),
        counts.get("query").copied().unwrap_or(0),
        counts.get("tick").copied().unwrap_or(0),
        out.display()
    );
    Ok(())
}

pub fn run(args: &RunArgs, file: &FileConfig) -> Result<(), CliError> {
    let weights = resolve_weights(&args.scoring, file)?;
    let budget = resolve_budget(args.budget, file)?;
    let k = resolve_k(args.k, file)?;
    let policy_name = args
        .policy
        .clone()
        .or_else(|| file.policy.clone())
        .ok_or_else(|| CliError::Usage("missing --policy".to_string()))?;
    let policy_seed = args.seed.unwrap_or(0);
    let policy = PolicyId::from_name(&policy_name, weights, policy_seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let trace = read_trace(&args.trace)?;
    echo_manifest(serde_json::json!({
        "command": "run",
        "trace": args.trace.display().to_string(),
        "policy": policy.name(),
        "policy_seed": policy_seed,
        "weights": weights_json(&weights),
        "budget": budget.max_items(),
        "k": k,
        "workload": trace.config,
    }));

    let outcome = replay_outcome(&trace, &policy, &weights, budget, k).map_err(map_harness)?;
    let report = &outcome.report;

    match &args.json_out {
        Some(path) => write_bytes(path, format!("{}\n", report.to_json()).as_bytes())?,
        None => println!("{}", report.to_json()),
    }
    if let Some(path) = &args.csv_out {
        write_bytes(
            path,
            format!("{CSV_HEADER}\n{}\n", report.csv_row()).as_bytes(),
        )?;
    }
    if let Some(path) = &args.dump_store {
        write_bytes(path, &outcome.store.snapshot())?;
    }
    println!(
        "policy={} seed={} events={} recall@{}={:.4} fmr={:.4} context_usage={:.4} peak={} tradeoff={:.4}",
        report.policy,
        report.seed,
        report.events,
        report.k,
        report.recall_at_k,
        report.fmr,
        report.context_usage,
        report.peak_memory,
        report.tradeoff
    );
    Ok(())
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let invalid = || CliError::Usage(format!("invalid --seeds '{text}': use N, A..B, or N,N,N"));
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| invalid())?;
        let hi: u64 = hi.trim().parse().map_err(|_| invalid())?;
        if lo > hi {
            return Err(invalid());
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|part| part.trim().parse().map_err(|_| invalid()))
        .collect()
}

pub fn compare(args: &CompareArgs, file: &FileConfig) -> Result<(), CliError> {
    if args.workload.seed.is_some() {
        return Err(CliError::Usage(
            "compare sweeps --seeds; --seed is not accepted".to_string(),
        ));
    }
    let weights = resolve_weights(&args.scoring, file)?;
    let budget = resolve_budget(args.budget, file)?;
    let k = resolve_k(args.k, file)?;

    let policy_names: Vec<String> = match (&args.policies, &file.policies) {
        (Some(list), _) => list
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
        (None, Some(list)) => list.clone(),
        (None, None) => return Err(CliError::Usage("missing --policies".to_string())),
    };
    for name in &policy_names {
        PolicyId::from_name(name, weights, 0).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let seeds = parse_seeds(
        args.seeds
            .as_deref()
            .ok_or_else(|| CliError::Usage("missing --seeds".to_string()))?,
    )?;

    let base = resolve_workload(&args.workload, file);
    base.validate().map_err(map_harness)?;
    echo_manifest(serde_json::json!({
        "command": "compare",
        "policies": policy_names,
        "seeds": seeds,
        "config": base,
        "weights": weights_json(&weights),
        "budget": budget.max_items(),
        "k": k,
    }));

    // One workload per seed, replayed under every policy; cells are
    // independent, so seeds run in parallel and rows are emitted in
    // deterministic (policy, seed) order afterwards.
    let per_seed: Vec<Vec<MetricsReport>> = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<MetricsReport>, CliError> {
            let config = WorkloadConfig {
                seed,
                ..base.clone()
            };
            let trace = generate_workload(&config).map_err(map_harness)?;
            policy_names
                .iter()
                .map(|name| {
                    let policy = PolicyId::from_name(name, weights, seed)
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    Ok(replay_outcome(&trace, &policy, &weights, budget, k)
                        .map_err(map_harness)?
                        .report)
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for policy_index in 0..policy_names.len() {
        for seed_reports in &per_seed {
            csv.push_str(&seed_reports[policy_index].csv_row());
            csv.push('\n');
        }
    }

    let mut summary = format!(
        "{:<14} {:>10} {:>10} {:>14} {:>10}\n",
        "policy", "recall_at_k", "fmr", "context_usage", "tradeoff"
    );
    for (policy_index, name) in policy_names.iter().enumerate() {
        let n = seeds.len().max(1) as f64;
        let mean = |f: fn(&MetricsReport) -> f64| -> f64 {
            per_seed
                .iter()
                .map(|reports| f(&reports[policy_index]))
                .sum::<f64>()
                / n
        };
        summary.push_str(&format!(
            "{:<14} {:>10.4} {:>10.4} {:>14.4} {:>10.4}\n",
            name,
            mean(|r| r.recall_at_k),
            mean(|r| r.fmr),
            mean(|r| r.context_usage),
            mean(|r| r.tradeoff),
        ));
    }

    match &args.out {
        Some(path) => {
            write_bytes(path, csv.as_bytes())?;
            print!("{summary}");
        }
        None => {
            print!("{csv}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

pub fn score(args: &ScoreArgs, file: &FileConfig) -> Result<(), CliError> {
    let weights = resolve_weights(&args.scoring, file)?;
    let dimension = resolve(args.dimension, file.dimension, 256);
    if dimension == 0 {
        return Err(CliError::Usage("dimension must be >= 1".to_string()));
    }
    let embedder = EmbedderConfig::new(dimension);
    let unit = MemoryUnit {
        id: 0,
        content: args.content.clone(),
        embedding: embed(&args.content, &embedder),
        inserted_at: args.inserted_at,
        last_accessed_at: args.inserted_at,
        access_count: args.access_count,
        metadata: BTreeMap::new(),
    };
    let query = args
        .query
        .as_ref()
        .map(|text| Query::from_text(text, args.t, &embedder));

    echo_manifest(serde_json::json!({
        "command": "score",
        "content": args.content,
        "query": args.query,
        "inserted_at": args.inserted_at,
        "t": args.t,
        "access_count": args.access_count,
        "dimension": dimension,
        "weights": weights_json(&weights),
    }));

    let breakdown = importance(&unit, query.as_ref(), args.t, &weights).map_err(map_memory)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&breakdown).expect("breakdown serializes")
    );
    Ok(())
}

pub fn snapshot_init(
    out: &Path,
    dimension: Option<usize>,
    budget: Option<usize>,
    scoring: &ScoringFlags,
    file: &FileConfig,
) -> Result<(), CliError> {
    let weights = resolve_weights(scoring, file)?;
    let dimension = resolve(dimension, file.dimension, 256);
    let budget = resolve_budget(budget, file)?;
    let store = MemoryStore::new(dimension, weights, budget).map_err(map_memory)?;
    echo_manifest(serde_json::json!({
        "command": "snapshot init",
        "dimension": dimension,
        "budget": budget.max_items(),
        "weights": weights_json(&weights),
        "out": out.display().to_string(),
    }));
    write_bytes(out, &store.snapshot())?;
    println!(
        "wrote empty snapshot (dimension {dimension}, budget {}) to {}",
        budget.max_items(),
        out.display()
    );
    Ok(())
}

pub fn snapshot_show(path: &Path) -> Result<(), CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let store = MemoryStore::load(&bytes).map_err(map_memory)?;
    println!(
        "{}",
        serde_json::json!({
            "dimension": store.dimension(),
            "clock": store.clock(),
            "next_id": store.next_id(),
            "units": store.len(),
            "budget": store.budget().max_items(),
            "weights": weights_json(store.weights()),
        })
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges_parse_inclusively() {
        assert_eq!(parse_seeds("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("3,9,1").unwrap(), vec![3, 9, 1]);
        assert!(parse_seeds("9..3").is_err());
        assert!(parse_seeds("x..y").is_err());
        assert!(parse_seeds("").is_err());
    }
}
