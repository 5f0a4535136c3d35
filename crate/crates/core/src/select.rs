//! Hyperparameter sweeps, relaxation-threshold model selection, and
//! multi-seed aggregation.
//!
//! Selection follows the relaxation-threshold rule: find the best validation
//! accuracy `alpha*` for a mode and seed, keep every run within `rt`
//! accuracy points of it, and pick the run with the smallest validation
//! fairness gap inside that window. RT = 0 reduces to picking the most
//! accurate run.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // float math comes from libm in no_std builds
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::RunResult;
use crate::train::{self, Mode, TrainConfig};

/// The hyperparameter axes of a sweep. Each mode consumes only the axes it
/// uses, so grid size is the product of the applicable axes times seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub modes: Vec<Mode>,
    pub lambda_max: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub seeds: Vec<u64>,
}

/// Lambda ceiling grid 0.1 to 3.0 in steps of 0.2 (15 values).
pub fn default_lambda_grid() -> Vec<f64> {
    (0..15).map(|i| 0.1 + 0.2 * i as f64).collect()
}

/// Privacy budget grid 8..16 plus 20 (10 values).
pub fn default_epsilon_grid() -> Vec<f64> {
    alloc::vec![8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0, 20.0]
}

impl Default for SweepGrid {
    fn default() -> SweepGrid {
        SweepGrid {
            modes: alloc::vec![
                Mode::Unconstrained,
                Mode::Noise,
                Mode::Adversarial,
                Mode::Federate
            ],
            lambda_max: default_lambda_grid(),
            epsilons: default_epsilon_grid(),
            seeds: alloc::vec![0, 1, 2, 3, 4],
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() || self.seeds.is_empty() {
            return Err(Error::Usage("sweep needs at least one mode and one seed".into()));
        }
        for mode in &self.modes {
            if mode.uses_adversary() && self.lambda_max.is_empty() {
                return Err(Error::Usage(format!("mode {mode} needs a non-empty lambda grid")));
            }
            if mode.uses_privacy() && self.epsilons.is_empty() {
                return Err(Error::Usage(format!("mode {mode} needs a non-empty epsilon grid")));
            }
        }
        Ok(())
    }
}

/// Expands the grid into concrete run configurations: one per applicable
/// hyperparameter tuple per seed, in deterministic (mode, lambda, epsilon,
/// seed) order.
pub fn expand_grid(grid: &SweepGrid, base: &TrainConfig) -> Result<Vec<TrainConfig>> {
    grid.validate()?;
    let one = [f64::NAN]; // placeholder axis for modes that ignore it
    let mut configs = Vec::new();
    for &mode in &grid.modes {
        let lambdas: &[f64] = if mode.uses_adversary() { &grid.lambda_max } else { &one };
        let epsilons: &[f64] = if mode.uses_privacy() { &grid.epsilons } else { &one };
        for &lambda in lambdas {
            for &epsilon in epsilons {
                for &seed in &grid.seeds {
                    let mut config = base.clone();
                    config.mode = mode;
                    config.seed = seed;
                    if mode.uses_adversary() {
                        config.lambda_max = lambda;
                    }
                    if mode.uses_privacy() {
                        config.epsilon = epsilon;
                    }
                    configs.push(config);
                }
            }
        }
    }
    Ok(configs)
}

/// One sweep entry: either a finished run or a recorded failure. Failures
/// keep the sweep going; they are reported, not fatal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepEntry {
    Ok(RunResult),
    Failed {
        mode: crate::metrics::Method,
        epsilon: Option<f64>,
        lambda_max: Option<f64>,
        seed: u64,
        error: alloc::string::String,
    },
}

impl SweepEntry {
    pub fn result(&self) -> Option<&RunResult> {
        match self {
            SweepEntry::Ok(r) => Some(r),
            SweepEntry::Failed { .. } => None,
        }
    }
}

fn failure_of(config: &TrainConfig, error: &Error) -> SweepEntry {
    SweepEntry::Failed {
        mode: config.mode.into(),
        epsilon: if config.mode.uses_privacy() { Some(config.epsilon) } else { None },
        lambda_max: if config.mode.uses_adversary() { Some(config.lambda_max) } else { None },
        seed: config.seed,
        error: format!("{error}"),
    }
}

/// Runs every grid point sequentially. Results arrive in grid order and are
/// keyed by their configuration, so execution order never affects them.
/// (The CLI companion crate parallelizes this with identical semantics.)
pub fn run_sweep(grid: &SweepGrid, dataset: &Dataset, base: &TrainConfig) -> Result<Vec<SweepEntry>> {
    let configs = expand_grid(grid, base)?;
    Ok(configs
        .iter()
        .map(|config| match train::train_run(config, dataset) {
            Ok(outcome) => SweepEntry::Ok(outcome.result),
            Err(err) => failure_of(config, &err),
        })
        .collect())
}

/// Outcome of relaxation-threshold selection over one mode and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub rt: f64,
    /// Best validation accuracy among the candidates.
    pub alpha_star: f64,
    pub chosen: RunResult,
    pub candidate_count: usize,
}

/// Picks, among runs whose validation accuracy is within `rt` points of the
/// best, the one with the smallest validation gap. Ties break toward higher
/// accuracy, then lower epsilon (more privacy), then lower lambda.
pub fn select_with_rt(runs: &[RunResult], rt: f64) -> Result<SelectionResult> {
    select_with_rt_opts(runs, rt, false)
}

/// [`select_with_rt`] with an optional third criterion: when
/// `privacy_criterion` is set, runs inside the accuracy window are ranked
/// by validation gap and then by measured leakage before the ordinary tie
/// breaks. Off by default — leakage rarely varies enough across
/// hyperparameters to matter, and the recorded leakage is measured on test
/// representations, so switching this on trades selection hygiene for a
/// privacy preference.
pub fn select_with_rt_opts(
    runs: &[RunResult],
    rt: f64,
    privacy_criterion: bool,
) -> Result<SelectionResult> {
    if runs.is_empty() {
        return Err(Error::Usage("selection needs at least one run".into()));
    }
    if rt < 0.0 {
        return Err(Error::Param(format!("relaxation threshold must be >= 0, got {rt}")));
    }
    let alpha_star =
        runs.iter().map(|r| r.val.acc).fold(f64::NEG_INFINITY, f64::max);
    let window: Vec<&RunResult> =
        runs.iter().filter(|r| r.val.acc >= alpha_star - rt).collect();
    let chosen = window
        .iter()
        .min_by(|a, b| {
            let eps = |r: &RunResult| r.epsilon.unwrap_or(f64::INFINITY);
            let lam = |r: &RunResult| r.lambda_max.unwrap_or(f64::INFINITY);
            let leak = |r: &RunResult| {
                if privacy_criterion {
                    r.test.leakage.unwrap_or(f64::INFINITY)
                } else {
                    0.0
                }
            };
            a.val
                .gap
                .total_cmp(&b.val.gap)
                .then(leak(a).total_cmp(&leak(b)))
                .then(b.val.acc.total_cmp(&a.val.acc))
                .then(eps(a).total_cmp(&eps(b)))
                .then(lam(a).total_cmp(&lam(b)))
        })
        .expect("window contains at least the alpha* run");
    Ok(SelectionResult {
        rt,
        alpha_star,
        chosen: (*chosen).clone(),
        candidate_count: window.len(),
    })
}

/// Sample mean and standard deviation (n-1 denominator; 0 for a single
/// value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
}

pub fn aggregate(values: &[f64]) -> Result<Aggregate> {
    if values.is_empty() {
        return Err(Error::Usage("cannot aggregate zero values".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() == 1 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(Aggregate { mean, std })
}

/// Per-metric aggregates of one mode's selected runs across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub mode: crate::metrics::Method,
    pub seeds: usize,
    pub val_acc: Aggregate,
    pub val_gap: Aggregate,
    pub test_acc: Aggregate,
    pub test_gap: Aggregate,
    /// Absent when no selected run carries a leakage value (random rows).
    pub leakage: Option<Aggregate>,
    pub mdl_bits: Aggregate,
    pub uniform_bits: Aggregate,
}

/// Aggregates the per-seed selected runs of a single mode.
pub fn aggregate_results(selected: &[RunResult]) -> Result<AggregateRow> {
    if selected.is_empty() {
        return Err(Error::Usage("cannot aggregate zero runs".into()));
    }
    let mode = selected[0].mode;
    if selected.iter().any(|r| r.mode != mode) {
        return Err(Error::Usage("aggregation mixes modes".into()));
    }
    let pick = |f: &dyn Fn(&RunResult) -> f64| -> Result<Aggregate> {
        let values: Vec<f64> = selected.iter().map(f).collect();
        aggregate(&values)
    };
    let leakages: Vec<f64> = selected.iter().filter_map(|r| r.test.leakage).collect();
    Ok(AggregateRow {
        mode,
        seeds: selected.len(),
        val_acc: pick(&|r| r.val.acc)?,
        val_gap: pick(&|r| r.val.gap)?,
        test_acc: pick(&|r| r.test.acc)?,
        test_gap: pick(&|r| r.test.gap)?,
        leakage: if leakages.is_empty() { None } else { Some(aggregate(&leakages)?) },
        mdl_bits: pick(&|r| r.test.mdl_bits)?,
        uniform_bits: pick(&|r| r.test.uniform_bits)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Method, SplitMetrics, TestMetrics};

    fn run(acc: f64, gap: f64) -> RunResult {
        RunResult {
            mode: Method::Federate,
            epsilon: Some(10.0),
            lambda_max: Some(1.0),
            seed: 0,
            val: SplitMetrics { acc, gap },
            test: TestMetrics {
                acc,
                gap,
                leakage: Some(50.0),
                mdl_bits: 100.0,
                uniform_bits: 200.0,
            },
        }
    }

    #[test]
    fn grid_sizes_match_applicable_axes() {
        let grid = SweepGrid::default();
        let base = TrainConfig::new(Mode::Federate);
        let configs = expand_grid(&grid, &base).unwrap();
        // Per seed: unconstrained 1, noise 10, adversarial 15,
        // federate 150.
        assert_eq!(configs.len(), 5 * (1 + 10 + 15 + 150));
        let federate =
            configs.iter().filter(|c| c.mode == Mode::Federate).count();
        assert_eq!(federate, 5 * 150);
        let unconstrained =
            configs.iter().filter(|c| c.mode == Mode::Unconstrained).count();
        assert_eq!(unconstrained, 5);
        let adversarial =
            configs.iter().filter(|c| c.mode == Mode::Adversarial).count();
        assert_eq!(adversarial, 5 * 15);
    }

    #[test]
    fn default_lambda_grid_has_fifteen_values() {
        let grid = default_lambda_grid();
        assert_eq!(grid.len(), 15);
        assert!((grid[0] - 0.1).abs() < 1e-12);
        assert!((grid[14] - 2.9).abs() < 1e-12);
    }

    #[test]
    fn rt_zero_returns_the_most_accurate_run() {
        let runs = alloc::vec![run(75.0, 5.0), run(74.5, 2.0), run(70.0, 1.0)];
        let sel = select_with_rt(&runs, 0.0).unwrap();
        assert_eq!(sel.chosen.val.acc, 75.0);
        assert_eq!(sel.candidate_count, 1);
        assert_eq!(sel.alpha_star, 75.0);
    }

    #[test]
    fn huge_rt_returns_the_globally_fairest_run() {
        let runs = alloc::vec![run(75.0, 5.0), run(74.5, 2.0), run(70.0, 1.0)];
        let sel = select_with_rt(&runs, 100.0).unwrap();
        assert_eq!(sel.chosen.val.gap, 1.0);
        assert_eq!(sel.candidate_count, 3);
    }

    #[test]
    fn toy_table_with_rt_one_picks_the_window_minimum() {
        // Window is [74, 75]: the 70-accuracy run is outside it.
        let runs = alloc::vec![run(75.0, 5.0), run(74.5, 2.0), run(70.0, 1.0)];
        let sel = select_with_rt(&runs, 1.0).unwrap();
        assert_eq!(sel.chosen.val.acc, 74.5);
        assert_eq!(sel.chosen.val.gap, 2.0);
        assert!(sel.chosen.val.acc >= sel.alpha_star - sel.rt);
    }

    #[test]
    fn selection_gap_is_monotone_in_rt() {
        let runs = alloc::vec![
            run(80.0, 9.0),
            run(79.5, 7.0),
            run(78.0, 3.0),
            run(74.0, 2.5),
            run(60.0, 0.5),
        ];
        let mut prev = f64::INFINITY;
        for rt in [0.0, 1.0, 3.0, 10.0, 100.0] {
            let gap = select_with_rt(&runs, rt).unwrap().chosen.val.gap;
            assert!(gap <= prev, "gap {gap} increased at rt {rt}");
            prev = gap;
        }
    }

    #[test]
    fn selection_tie_breaks_prefer_privacy() {
        let mut a = run(75.0, 2.0);
        a.epsilon = Some(8.0);
        let mut b = run(75.0, 2.0);
        b.epsilon = Some(16.0);
        let sel = select_with_rt(&[b, a], 1.0).unwrap();
        assert_eq!(sel.chosen.epsilon, Some(8.0));
    }

    #[test]
    fn run_failures_are_recorded_not_fatal() {
        // A dataset with no validation split makes every run fail fast.
        let means = [alloc::vec![1.0, 0.0], alloc::vec![-1.0, 0.0]];
        let ds = crate::data::make_synthetic(40, 2, &means, &[0.0, 0.1], 1.0, 3).unwrap();
        let grid = SweepGrid {
            modes: alloc::vec![Mode::Unconstrained],
            lambda_max: alloc::vec![],
            epsilons: alloc::vec![],
            seeds: alloc::vec![0, 1],
        };
        let base = TrainConfig::new(Mode::Unconstrained);
        let entries = run_sweep(&grid, &ds, &base).unwrap();
        assert_eq!(entries.len(), 2);
        for entry in &entries {
            match entry {
                SweepEntry::Failed { error, .. } => {
                    assert!(error.contains("validation"), "{error}")
                }
                SweepEntry::Ok(_) => panic!("run should have failed"),
            }
        }
    }

    #[test]
    fn privacy_criterion_breaks_gap_ties_by_leakage() {
        let mut a = run(75.0, 2.0);
        a.test.leakage = Some(80.0);
        a.epsilon = Some(8.0);
        let mut b = run(75.0, 2.0);
        b.test.leakage = Some(60.0);
        b.epsilon = Some(16.0);
        // Off: epsilon tie-break prefers 8. On: leakage prefers the 60.
        let off = select_with_rt_opts(&[a.clone(), b.clone()], 1.0, false).unwrap();
        assert_eq!(off.chosen.epsilon, Some(8.0));
        let on = select_with_rt_opts(&[a, b], 1.0, true).unwrap();
        assert_eq!(on.chosen.test.leakage, Some(60.0));
    }

    #[test]
    fn aggregate_mean_and_std() {
        let agg = aggregate(&[1.0, 3.0]).unwrap();
        assert_eq!(agg.mean, 2.0);
        assert!((agg.std - core::f64::consts::SQRT_2).abs() < 1e-12);
        let single = aggregate(&[4.2]).unwrap();
        assert_eq!(single.std, 0.0);
        let constant = aggregate(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(constant.std, 0.0);
        assert!(aggregate(&[]).is_err());
    }
}
