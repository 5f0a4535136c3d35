//! Table rendering over a results file: per-seed relaxation-threshold
//! selection, multi-seed aggregation, and markdown/CSV output with rows in
//! the fixed order Random, Unconstrained, Noise, Adversarial, FEDERATE.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Result};
use federate_core::metrics::{Method, RunResult};
use federate_core::select::{aggregate_results, select_with_rt_opts, Aggregate, AggregateRow};

use crate::config::ReportFormat;

/// Applies RT selection per (mode, seed) and aggregates across seeds.
pub fn build_rows(results: &[RunResult], rt: f64) -> Result<Vec<AggregateRow>> {
    build_rows_opts(results, rt, false)
}

/// [`build_rows`] with the optional privacy selection criterion.
pub fn build_rows_opts(
    results: &[RunResult],
    rt: f64,
    privacy_criterion: bool,
) -> Result<Vec<AggregateRow>> {
    if results.is_empty() {
        bail!("no runs in the results file");
    }
    let mut by_mode_seed: BTreeMap<(Method, u64), Vec<RunResult>> = BTreeMap::new();
    for result in results {
        by_mode_seed.entry((result.mode, result.seed)).or_default().push(result.clone());
    }
    let mut by_mode: BTreeMap<Method, Vec<RunResult>> = BTreeMap::new();
    for ((mode, _seed), runs) in by_mode_seed {
        let selected = select_with_rt_opts(&runs, rt, privacy_criterion)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        by_mode.entry(mode).or_default().push(selected.chosen);
    }
    by_mode
        .into_values()
        .map(|selected| aggregate_results(&selected).map_err(|e| anyhow::anyhow!("{e}")))
        .collect()
}

fn cell(agg: &Aggregate) -> String {
    format!("{:.2} ± {:.2}", agg.mean, agg.std)
}

fn optional_cell(agg: &Option<Aggregate>) -> String {
    agg.as_ref().map(cell).unwrap_or_else(|| "-".to_string())
}

pub fn render_markdown(rows: &[AggregateRow], rt: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Per-seed selection at RT = {rt}; mean ± std over seeds.");
    let _ = writeln!(out);
    let _ = writeln!(out, "| Method | Accuracy ↑ | Gap ↓ | Leakage ↓ | MDL ↑ |");
    let _ = writeln!(out, "| --- | --- | --- | --- | --- |");
    for row in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            row.mode,
            cell(&row.test_acc),
            cell(&row.test_gap),
            optional_cell(&row.leakage),
            cell(&row.mdl_bits),
        );
    }
    out
}

pub fn render_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(
        "method,seeds,acc_mean,acc_std,gap_mean,gap_std,leakage_mean,leakage_std,mdl_mean,mdl_std\n",
    );
    for row in rows {
        let (leak_mean, leak_std) = match &row.leakage {
            Some(a) => (format!("{:.2}", a.mean), format!("{:.2}", a.std)),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{:.2},{:.2},{:.2},{:.2},{},{},{:.2},{:.2}",
            row.mode,
            row.seeds,
            row.test_acc.mean,
            row.test_acc.std,
            row.test_gap.mean,
            row.test_gap.std,
            leak_mean,
            leak_std,
            row.mdl_bits.mean,
            row.mdl_bits.std,
        );
    }
    out
}

pub fn render(rows: &[AggregateRow], format: ReportFormat, rt: f64) -> String {
    match format {
        ReportFormat::Markdown => render_markdown(rows, rt),
        ReportFormat::Csv => render_csv(rows),
    }
}
