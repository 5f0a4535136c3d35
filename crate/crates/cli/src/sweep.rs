//! Parallel, resumable sweep execution.
//!
//! Grid points run on a rayon pool and land in a JSON-lines results file in
//! deterministic grid order, so identical invocations produce byte-identical
//! payloads. On resume, runs whose `(mode, epsilon, lambda_max, seed)` key
//! already has a successful entry in the file are skipped; recorded
//! failures are retried.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use federate_core::data::Dataset;
use federate_core::metrics::{random_baseline, Method, RunResult};
use federate_core::select::{expand_grid, SweepEntry, SweepGrid};
use federate_core::train::{train_run, TrainConfig};
use rayon::prelude::*;

/// Identity of one run in a results file. Budgets compare by bit pattern:
/// keys must match exactly, not approximately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RunKey {
    pub mode: Method,
    pub epsilon_bits: Option<u64>,
    pub lambda_bits: Option<u64>,
    pub seed: u64,
}

impl RunKey {
    pub fn of_result(result: &RunResult) -> RunKey {
        RunKey {
            mode: result.mode,
            epsilon_bits: result.epsilon.map(f64::to_bits),
            lambda_bits: result.lambda_max.map(f64::to_bits),
            seed: result.seed,
        }
    }

    fn of_config(config: &TrainConfig) -> RunKey {
        RunKey {
            mode: config.mode.into(),
            epsilon_bits: config.mode.uses_privacy().then(|| config.epsilon.to_bits()),
            lambda_bits: config.mode.uses_adversary().then(|| config.lambda_max.to_bits()),
            seed: config.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSummary {
    pub executed: usize,
    pub skipped: usize,
    pub failed: usize,
}

/// Parses a results file into entries (tolerating a missing file).
pub fn load_entries(path: &Path) -> Result<Vec<SweepEntry>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read results file {}", path.display()))?;
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: SweepEntry = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: bad results line", path.display(), idx + 1))?;
        entries.push(entry);
    }
    Ok(entries)
}

fn rayon_pool(workers: usize) -> Result<rayon::ThreadPool> {
    let workers = match std::env::var("FEDERATE_WORKERS") {
        Ok(v) => v
            .parse::<usize>()
            .with_context(|| format!("FEDERATE_WORKERS='{v}' is not a number"))?,
        Err(_) => workers,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    builder.build().context("cannot build worker pool")
}

/// Runs the grid, appending new entries to `results_path`. With
/// `include_random`, one random-reference row per seed is emitted first
/// (keyed like any other run).
pub fn run_sweep_to_file(
    grid: &SweepGrid,
    dataset: &Dataset,
    base: &TrainConfig,
    results_path: &Path,
    workers: usize,
    include_random: bool,
) -> Result<SweepSummary> {
    let existing = load_entries(results_path)?;
    let done: BTreeSet<RunKey> =
        existing.iter().filter_map(|e| e.result().map(RunKey::of_result)).collect();

    let configs = expand_grid(grid, base).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut skipped = 0usize;

    // Random reference rows first, in seed order.
    let mut random_jobs = Vec::new();
    if include_random {
        for &seed in &grid.seeds {
            let key = RunKey {
                mode: Method::Random,
                epsilon_bits: None,
                lambda_bits: None,
                seed,
            };
            if done.contains(&key) {
                skipped += 1;
            } else {
                random_jobs.push(seed);
            }
        }
    }
    let pending: Vec<&TrainConfig> = configs
        .iter()
        .filter(|c| {
            let fresh = !done.contains(&RunKey::of_config(c));
            if !fresh {
                skipped += 1;
            }
            fresh
        })
        .collect();

    let pool = rayon_pool(workers)?;
    let rep_dim = base.rep_dim();
    let (random_entries, run_entries): (Vec<SweepEntry>, Vec<SweepEntry>) = pool.install(|| {
        let random_entries: Vec<SweepEntry> = random_jobs
            .par_iter()
            .map(|&seed| match random_baseline(dataset, rep_dim, seed) {
                Ok(result) => SweepEntry::Ok(result),
                Err(e) => SweepEntry::Failed {
                    mode: Method::Random,
                    epsilon: None,
                    lambda_max: None,
                    seed,
                    error: format!("random baseline: {e}"),
                },
            })
            .collect();
        let run_entries: Vec<SweepEntry> = pending
            .par_iter()
            .map(|config| match train_run(config, dataset) {
                Ok(outcome) => SweepEntry::Ok(outcome.result),
                Err(e) => SweepEntry::Failed {
                    mode: config.mode.into(),
                    epsilon: config.mode.uses_privacy().then_some(config.epsilon),
                    lambda_max: config.mode.uses_adversary().then_some(config.lambda_max),
                    seed: config.seed,
                    error: format!("{e}"),
                },
            })
            .collect();
        (random_entries, run_entries)
    });

    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(results_path)
        .with_context(|| format!("cannot open results file {}", results_path.display()))?;
    let mut failed = 0usize;
    let mut executed = 0usize;
    for entry in random_entries.iter().chain(&run_entries) {
        if entry.result().is_none() {
            failed += 1;
        }
        executed += 1;
        let line = serde_json::to_string(entry).context("serializing result")?;
        writeln!(file, "{line}")?;
    }
    file.flush()?;
    Ok(SweepSummary { executed, skipped, failed })
}
