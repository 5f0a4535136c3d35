//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (visible with `--nocapture` and on failure).
//!
//! Criterion 5 needs the Adult Income CSV (standard UCI format with a
//! header row). It looks at `FEDERATE_ADULT_CSV`, then `data/adult.csv` at
//! the workspace root, and fails with instructions when the file is absent.

use std::path::PathBuf;
use std::time::Instant;

use federate_cli::sweep;
use federate_core::data::{make_synthetic, skew_subgroups, split_dataset, Dataset, SkewSpec};
use federate_core::mat::Matrix;
use federate_core::metrics::{mdl_online, ProbeConfig};
use federate_core::nn::{cross_entropy, grad_reverse_backward, LayerStack, StackGrads};
use federate_core::privacy::{
    dp_ratio_test, l1_normalize_backward_rows, l1_normalize_rows, sample_laplace,
    sensitivity_audit, Normalizer,
};
use federate_core::rng;
use federate_core::select::{expand_grid, select_with_rt, SweepGrid};
use federate_core::train::{train_run, Mode, TrainConfig};
use rand::Rng;

fn conclude(number: u32, name: &str, outcome: Result<String, String>) {
    match outcome {
        Ok(detail) => println!("ACCEPTANCE {number} ({name}): PASS — {detail}"),
        Err(detail) => {
            println!("ACCEPTANCE {number} ({name}): FAIL — {detail}");
            panic!("acceptance criterion {number} ({name}) failed: {detail}");
        }
    }
}

fn check(ok: bool, label: String, failures: &mut Vec<String>) {
    if !ok {
        failures.push(label);
    }
}

fn outcome_of(failures: Vec<String>, detail: String) -> Result<String, String> {
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(failures.join("; "))
    }
}

// ---------------------------------------------------------------------
// 1. Sensitivity correctness.
// ---------------------------------------------------------------------

#[test]
fn acceptance_1_sensitivity_bound() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let dims = [2usize, 3, 4, 8, 16, 32, 64, 128, 200, 300];
    let per_dim = 145usize; // 145*144/2 = 10440 pairs per dim, >= 1e5 total
    let mut total_pairs = 0usize;
    let mut max_seen = 0.0f64;
    for (i, &dim) in dims.iter().enumerate() {
        let mut r = rng::stream(9000 + i as u64, 1);
        let inputs: Vec<Vec<f64>> = (0..per_dim)
            .map(|_| {
                let scale = 10f64.powf(r.gen_range(-2.0..2.0));
                (0..dim).map(|_| r.gen_range(-1.0..1.0) * scale).collect()
            })
            .collect();
        let report = sensitivity_audit(Normalizer::L1, &inputs, true).unwrap();
        total_pairs += report.pair_count;
        max_seen = max_seen.max(report.max_l1_distance);
        check(
            report.max_l1_distance <= 2.0 + 1e-9,
            format!("dim {dim}: distance {} exceeds 2", report.max_l1_distance),
            &mut failures,
        );
        check(
            report.max_l1_distance >= 1.999,
            format!("dim {dim}: constructed pair attained only {}", report.max_l1_distance),
            &mut failures,
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(total_pairs >= 100_000, format!("only {total_pairs} pairs evaluated"), &mut failures);
    check(elapsed < 10.0, format!("runtime {elapsed:.1}s exceeds 10s"), &mut failures);
    conclude(
        1,
        "sensitivity bound",
        outcome_of(
            failures,
            format!("{total_pairs} pairs across dims 2..300, max distance {max_seen:.9}, {elapsed:.2}s"),
        ),
    );
}

// ---------------------------------------------------------------------
// 2. Prior-work error reproduction.
// ---------------------------------------------------------------------

#[test]
fn acceptance_2_prior_work_error() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for dim in [4usize, 64, 300] {
        let (a, b) = Normalizer::MinMax.adversarial_pair(dim);
        let report = sensitivity_audit(Normalizer::MinMax, &[a, b], false).unwrap();
        check(
            report.max_l1_distance >= 0.99 * dim as f64,
            format!("min-max pair at dim {dim} attained only {}", report.max_l1_distance),
            &mut failures,
        );
    }
    let samples = 1_000_000usize;
    let edges = [-0.5, 0.5];
    let (a, b) = Normalizer::MinMax.adversarial_pair(4);
    let legacy = dp_ratio_test(
        Normalizer::MinMax,
        1.0,
        &a,
        &b,
        &edges,
        samples,
        &mut rng::stream(9100, 1),
    )
    .unwrap();
    check(
        !legacy.pass,
        format!(
            "legacy mechanism passed (ratio {:.3} <= 1 + {:.3})",
            legacy.max_abs_log_ratio, legacy.slack
        ),
        &mut failures,
    );
    let (a, b) = Normalizer::L1.adversarial_pair(4);
    let corrected =
        dp_ratio_test(Normalizer::L1, 1.0, &a, &b, &edges, samples, &mut rng::stream(9101, 1))
            .unwrap();
    check(
        corrected.pass,
        format!(
            "corrected mechanism failed (ratio {:.3} > 1 + {:.3})",
            corrected.max_abs_log_ratio, corrected.slack
        ),
        &mut failures,
    );
    let elapsed = start.elapsed().as_secs_f64();
    check(elapsed < 120.0, format!("runtime {elapsed:.1}s exceeds 2 min"), &mut failures);
    conclude(
        2,
        "prior-work normalization error",
        outcome_of(
            failures,
            format!(
                "legacy ratio {:.3} (fails), corrected ratio {:.3} <= 1 + {:.3} (passes), {:.1}s",
                legacy.max_abs_log_ratio, corrected.max_abs_log_ratio, corrected.slack, elapsed
            ),
        ),
    );
}

// ---------------------------------------------------------------------
// 3. Gradient integrity (finite differences + reversal contract).
// ---------------------------------------------------------------------

const FD_STEP: f64 = 1e-5;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-4)
}

fn fd_loss(stack: &LayerStack, batch: &Matrix, labels: &[usize], mask_seed: u64) -> f64 {
    let mut r = rng::stream(mask_seed, 77);
    let (out, _) = stack.forward_train(batch, &mut r).unwrap();
    cross_entropy(&out, labels).unwrap().0
}

/// FD-checks every parameter; returns (checked, kink-skipped, worst rel err).
fn fd_check(
    stack: &mut LayerStack,
    batch: &Matrix,
    labels: &[usize],
    mask_seed: u64,
    failures: &mut Vec<String>,
) -> (usize, usize, f64) {
    let (grads, _) = {
        let mut r = rng::stream(mask_seed, 77);
        let (out, tape) = stack.forward_train(batch, &mut r).unwrap();
        let (_, grad) = cross_entropy(&out, labels).unwrap();
        stack.backward(&tape, &grad).unwrap()
    };
    let center = fd_loss(stack, batch, labels, mask_seed);
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut worst = 0.0f64;
    let layer_count = stack.layers().len();
    for li in 0..layer_count {
        let (rows, cols) = (stack.layers()[li].weight.rows(), stack.layers()[li].weight.cols());
        let coords: Vec<(bool, usize, usize)> = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (true, i, j)))
            .chain((0..stack.layers()[li].bias.len()).map(|i| (false, i, 0)))
            .collect();
        for (is_weight, i, j) in coords {
            let analytic = if is_weight {
                grads.layers[li].weight[(i, j)]
            } else {
                grads.layers[li].bias[i]
            };
            let slot = |stack: &mut LayerStack| -> *mut f64 {
                if is_weight {
                    &mut stack.layers_mut()[li].weight[(i, j)]
                } else {
                    &mut stack.layers_mut()[li].bias[i]
                }
            };
            let orig = unsafe { *slot(stack) };
            unsafe { *slot(stack) = orig + FD_STEP };
            let plus = fd_loss(stack, batch, labels, mask_seed);
            unsafe { *slot(stack) = orig - FD_STEP };
            let minus = fd_loss(stack, batch, labels, mask_seed);
            unsafe { *slot(stack) = orig };
            // A second difference of order h flags a ReLU kink straddle,
            // where central differences do not estimate the gradient.
            if (plus + minus - 2.0 * center).abs() > 1e-8 {
                skipped += 1;
                continue;
            }
            checked += 1;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let err = rel_err(analytic, numeric);
            worst = worst.max(err);
            if err >= 1e-4 {
                failures.push(format!(
                    "layer {li} {}[{i},{j}]: analytic {analytic}, numeric {numeric}",
                    if is_weight { "w" } else { "b" }
                ));
            }
        }
    }
    (checked, skipped, worst)
}

#[test]
fn acceptance_3_gradient_integrity() {
    let mut failures = Vec::new();
    let mut outer = rng::stream(777, 1);
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut worst = 0.0f64;
    // 100 random configurations cycling through encoder-, classifier-, and
    // adversary-shaped stacks (1 to 3 layers, mixed dropout).
    for case in 0..100u64 {
        let in_dim = outer.gen_range(2..6);
        let hidden = outer.gen_range(2..7);
        let out_dim = outer.gen_range(2..4);
        let layers = 1 + (case as usize % 3);
        let dims: Vec<usize> = std::iter::once(in_dim)
            .chain((0..layers - 1).map(|_| hidden))
            .chain(std::iter::once(out_dim))
            .collect();
        let dropout = [0.0, 0.1, 0.2][case as usize % 3];
        let mut stack = LayerStack::mlp(&dims, dropout, &mut outer).unwrap();
        for layer in stack.layers_mut() {
            for b in &mut layer.bias {
                *b = outer.gen_range(-0.05..0.05);
            }
        }
        let rows = outer.gen_range(2..5);
        let batch = Matrix::from_fn(rows, in_dim, |_, _| outer.gen_range(-0.8..0.8));
        let labels: Vec<usize> = (0..rows).map(|_| outer.gen_range(0..out_dim)).collect();
        let (c, s, w) = fd_check(&mut stack, &batch, &labels, 5000 + case, &mut failures);
        checked += c;
        skipped += s;
        worst = worst.max(w);
    }
    check(
        skipped * 50 <= checked.max(1),
        format!("too many kink skips: {skipped} of {}", checked + skipped),
        &mut failures,
    );

    // Reversal contract at 1e-10, through the full private path.
    let mut worst_contract = 0.0f64;
    for case in 0..10 {
        let lambda = [0.0, 0.3, 0.7, 1.5, 3.0][case % 5];
        let mut stack_of = |dims: &[usize]| -> LayerStack {
            let mut stack = LayerStack::mlp(dims, 0.0, &mut outer).unwrap();
            // Off-zero biases keep every encoder output row away from the
            // degenerate all-dead case.
            for layer in stack.layers_mut() {
                for b in &mut layer.bias {
                    *b = outer.gen_range(0.01..0.1);
                }
            }
            stack
        };
        let encoder = stack_of(&[4, 6, 3]);
        let classifier = stack_of(&[3, 2]);
        let adversary = stack_of(&[3, 5, 2]);
        let batch = Matrix::from_fn(6, 4, |_, _| outer.gen_range(-0.8..0.8));
        let y: Vec<usize> = (0..6).map(|_| outer.gen_range(0..2)).collect();
        let z: Vec<usize> = (0..6).map(|_| outer.gen_range(0..2)).collect();
        let mut nil = rng::stream(0, 0);
        let (enc_out, enc_tape) = encoder.forward_train(&batch, &mut nil).unwrap();
        let normalized = l1_normalize_rows(&enc_out).unwrap();
        let noise =
            sample_laplace(0.2, 6 * 3, &mut rng::stream(6000 + case as u64, 1)).unwrap();
        let mut rep = normalized;
        for (r, n) in rep.as_mut_slice().iter_mut().zip(&noise) {
            *r += n;
        }
        let rep_grad_of = |head: &LayerStack, labels: &[usize]| -> Matrix {
            let mut nil = rng::stream(0, 0);
            let (logits, tape) = head.forward_train(&rep, &mut nil).unwrap();
            let (_, grad) = cross_entropy(&logits, labels).unwrap();
            head.backward(&tape, &grad).unwrap().1
        };
        let enc_grad_of = |rep_grad: &Matrix| -> StackGrads {
            let upstream = l1_normalize_backward_rows(&enc_out, rep_grad);
            encoder.backward(&enc_tape, &upstream).unwrap().0
        };
        let mut combined_rep = rep_grad_of(&classifier, &y);
        combined_rep.add_assign(&grad_reverse_backward(&rep_grad_of(&adversary, &z), lambda));
        let combined = enc_grad_of(&combined_rep);
        let mut independent = enc_grad_of(&rep_grad_of(&classifier, &y));
        independent.add_scaled(&enc_grad_of(&rep_grad_of(&adversary, &z)), -lambda);
        for (a, b) in combined.layers.iter().zip(&independent.layers) {
            for (x, y) in a
                .weight
                .as_slice()
                .iter()
                .chain(&a.bias)
                .zip(b.weight.as_slice().iter().chain(&b.bias))
            {
                let diff = (x - y).abs();
                worst_contract = worst_contract.max(diff);
                check(
                    diff <= 1e-10,
                    format!("reversal contract violated at lambda {lambda}: |{x} - {y}|"),
                    &mut failures,
                );
            }
        }
    }
    conclude(
        3,
        "gradient integrity",
        outcome_of(
            failures,
            format!(
                "{checked} parameters FD-checked (worst rel err {worst:.2e}, {skipped} kink skips), reversal contract within {worst_contract:.2e}"
            ),
        ),
    );
}

// ---------------------------------------------------------------------
// 4. Laplace sampler.
// ---------------------------------------------------------------------

fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

#[test]
fn acceptance_4_laplace_sampler() {
    let mut failures = Vec::new();
    let draws = sample_laplace(0.25, 1_000_000, &mut rng::stream(40, 1)).unwrap();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let mean_abs = draws.iter().map(|x| x.abs()).sum::<f64>() / draws.len() as f64;
    check(mean.abs() <= 0.002, format!("|mean| {:.5} > 0.002", mean.abs()), &mut failures);
    check(
        (mean_abs - 0.25).abs() <= 0.005,
        format!("mean |x| {mean_abs:.5} off 0.25 by more than 2%"),
        &mut failures,
    );
    let n = 100_000usize;
    let mut ks_draws = sample_laplace(0.25, n, &mut rng::stream(41, 1)).unwrap();
    ks_draws.sort_by(f64::total_cmp);
    let mut d = 0.0f64;
    for (i, &x) in ks_draws.iter().enumerate() {
        let f = laplace_cdf(x, 0.25);
        d = d.max(((i + 1) as f64 / n as f64 - f).abs()).max((f - i as f64 / n as f64).abs());
    }
    let threshold = 1.62762 / (n as f64).sqrt(); // 0.01 significance
    check(d <= threshold, format!("KS statistic {d:.5} > {threshold:.5}"), &mut failures);
    conclude(
        4,
        "Laplace sampler",
        outcome_of(
            failures,
            format!("mean {mean:.6}, mean|x| {mean_abs:.6}, KS {d:.5} <= {threshold:.5}"),
        ),
    );
}

// ---------------------------------------------------------------------
// 5. Adult Income desk-scale reproduction.
// ---------------------------------------------------------------------

fn adult_csv_path() -> Option<PathBuf> {
    if let Ok(path) = std::env::var("FEDERATE_ADULT_CSV") {
        let path = PathBuf::from(path);
        if path.exists() {
            return Some(path);
        }
    }
    let workspace = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/adult.csv");
    workspace.exists().then_some(workspace)
}

fn adult_base_config() -> TrainConfig {
    let mut config = TrainConfig::new(Mode::Unconstrained);
    config.epochs = 40;
    config.batch_size = 2000;
    config.encoder_hidden = vec![64, 16];
    config.adversary_hidden = vec![64, 64];
    config
}

/// Seed-mean metrics of a desk-scale sweep after RT = 1.0 selection.
#[derive(Debug)]
struct DeskScaleStats {
    runs_total: usize,
    runs_ok: usize,
    uncon_acc: f64,
    uncon_gap: f64,
    fed_acc: f64,
    fed_gap: f64,
    fed_leak: f64,
    fed_mdl: f64,
    adv_leak: f64,
    adv_mdl: f64,
}

/// The reproduction protocol, independent of the dataset: sweep the grid,
/// select per mode and seed at RT = 1.0, and average each mode's selected
/// metrics over seeds. Also rehearsed on synthetic data below so the path
/// is known-good before anyone supplies the real file.
fn desk_scale_protocol(
    dataset: &federate_core::data::Dataset,
    base: &TrainConfig,
    grid: &SweepGrid,
) -> DeskScaleStats {
    let dir = tempfile::tempdir().unwrap();
    let results_path = dir.path().join("sweep.jsonl");
    sweep::run_sweep_to_file(grid, dataset, base, &results_path, 0, false).unwrap();
    let entries = sweep::load_entries(&results_path).unwrap();
    let results: Vec<_> = entries.iter().filter_map(|e| e.result().cloned()).collect();

    let mut selected: std::collections::BTreeMap<federate_core::metrics::Method, Vec<_>> =
        Default::default();
    for seed in &grid.seeds {
        for mode in &grid.modes {
            let method: federate_core::metrics::Method = (*mode).into();
            let runs: Vec<_> = results
                .iter()
                .filter(|r| r.mode == method && r.seed == *seed)
                .cloned()
                .collect();
            if runs.is_empty() {
                continue;
            }
            let chosen = select_with_rt(&runs, 1.0).unwrap().chosen;
            selected.entry(method).or_default().push(chosen);
        }
    }
    let mean = |f: &dyn Fn(&federate_core::metrics::RunResult) -> f64,
                method: federate_core::metrics::Method| {
        let runs = &selected[&method];
        runs.iter().map(f).sum::<f64>() / runs.len() as f64
    };
    use federate_core::metrics::Method::{Adversarial, Federate, Unconstrained};
    DeskScaleStats {
        runs_total: entries.len(),
        runs_ok: results.len(),
        uncon_acc: mean(&|r| r.test.acc, Unconstrained),
        uncon_gap: mean(&|r| r.test.gap, Unconstrained),
        fed_acc: mean(&|r| r.test.acc, Federate),
        fed_gap: mean(&|r| r.test.gap, Federate),
        fed_leak: mean(&|r| r.test.leakage.unwrap(), Federate),
        fed_mdl: mean(&|r| r.test.mdl_bits, Federate),
        adv_leak: mean(&|r| r.test.leakage.unwrap(), Adversarial),
        adv_mdl: mean(&|r| r.test.mdl_bits, Adversarial),
    }
}

/// Not an acceptance criterion: proves the reproduction protocol executes
/// end to end on a synthetic stand-in, so a missing data file is the only
/// thing between criterion 5 and a verdict.
#[test]
fn desk_scale_protocol_runs_on_a_synthetic_stand_in() {
    let dataset = skewed_synthetic(900);
    let mut base = synthetic_config(Mode::Unconstrained, 0);
    base.epochs = 4;
    let grid = SweepGrid {
        modes: vec![Mode::Unconstrained, Mode::Noise, Mode::Adversarial, Mode::Federate],
        lambda_max: vec![0.5, 1.5],
        epsilons: vec![10.0],
        seeds: vec![0, 1],
    };
    let stats = desk_scale_protocol(&dataset, &base, &grid);
    assert_eq!(stats.runs_total, 2 * (1 + 1 + 2 + 2));
    assert_eq!(stats.runs_ok, stats.runs_total);
    for v in [
        stats.uncon_acc,
        stats.uncon_gap,
        stats.fed_acc,
        stats.fed_gap,
        stats.fed_leak,
        stats.fed_mdl,
        stats.adv_leak,
        stats.adv_mdl,
    ] {
        assert!(v.is_finite());
    }
}

#[test]
fn acceptance_5_adult_income_desk_scale() {
    let Some(path) = adult_csv_path() else {
        conclude(
            5,
            "Adult Income desk-scale reproduction",
            Err(
                "Adult Income CSV not available: set FEDERATE_ADULT_CSV or place the standard \
                 UCI file (with the 15-column header row) at data/adult.csv. This environment \
                 has no route to the file (package mirrors only), so the criterion cannot \
                 execute here; the protocol itself is rehearsed on a synthetic stand-in and \
                 the loader on hand-encoded fixtures."
                    .to_string(),
            ),
        );
        return;
    };
    let start = Instant::now();
    let mut failures = Vec::new();
    let (dataset, report, _) = federate_cli::adult::load_adult(&path, [0.6, 0.2, 0.2], 7).unwrap();
    check(
        report.rows_kept + report.rows_dropped_missing <= 48_842,
        format!("{} rows exceeds the documented 48842", report.rows_kept),
        &mut failures,
    );

    let grid = SweepGrid {
        modes: vec![Mode::Unconstrained, Mode::Noise, Mode::Adversarial, Mode::Federate],
        lambda_max: vec![0.1, 0.8, 1.5, 2.2, 2.9],
        epsilons: vec![8.0, 12.0, 16.0],
        seeds: vec![0, 1, 2],
    };
    let stats = desk_scale_protocol(&dataset, &adult_base_config(), &grid);
    check(
        stats.runs_ok == stats.runs_total && stats.runs_ok == 72,
        format!("{} of {} runs succeeded (expected 72)", stats.runs_ok, stats.runs_total),
        &mut failures,
    );
    let DeskScaleStats {
        uncon_acc,
        uncon_gap,
        fed_acc,
        fed_gap,
        fed_leak,
        fed_mdl,
        adv_leak,
        adv_mdl,
        ..
    } = stats;

    check(
        (81.0..=85.0).contains(&uncon_acc),
        format!("unconstrained accuracy {uncon_acc:.2} outside [81, 85]"),
        &mut failures,
    );
    check(
        fed_gap <= 0.5 * uncon_gap,
        format!("gap reduction {uncon_gap:.2} -> {fed_gap:.2} is under 50%"),
        &mut failures,
    );
    check(
        fed_acc >= uncon_acc - 2.0,
        format!("accuracy drop {uncon_acc:.2} -> {fed_acc:.2} exceeds 2 points"),
        &mut failures,
    );
    check(
        fed_leak < adv_leak,
        format!("leakage {fed_leak:.2} not below adversarial {adv_leak:.2}"),
        &mut failures,
    );
    check(
        fed_mdl > adv_mdl,
        format!("MDL {fed_mdl:.1} not above adversarial {adv_mdl:.1}"),
        &mut failures,
    );
    let elapsed = start.elapsed().as_secs_f64();
    check(elapsed <= 3600.0, format!("runtime {elapsed:.0}s exceeds 60 min"), &mut failures);
    conclude(
        5,
        "Adult Income desk-scale reproduction",
        outcome_of(
            failures,
            format!(
                "uncon acc {uncon_acc:.2}, gap {uncon_gap:.2} -> {fed_gap:.2}, fed acc {fed_acc:.2}, leakage {fed_leak:.2} < {adv_leak:.2}, MDL {fed_mdl:.1} > {adv_mdl:.1}, {elapsed:.0}s"
            ),
        ),
    );
}

// ---------------------------------------------------------------------
// 6. Synthetic skew protocol direction check.
// ---------------------------------------------------------------------

fn skewed_synthetic(seed: u64) -> Dataset {
    let d = 8;
    let mut mean0 = vec![0.0; d];
    let mut mean1 = vec![0.0; d];
    mean0[0] = -1.0;
    mean1[0] = 1.0;
    let mut shift = vec![0.0; d];
    shift[1] = 1.0;
    let mut ds = make_synthetic(6000, d, &[mean0, mean1], &shift, 1.0, seed).unwrap();
    split_dataset(&mut ds, [0.6, 0.2, 0.2], seed).unwrap();
    skew_subgroups(&ds, &SkewSpec::binary(0.4, 0.1, 0.1, 0.4).unwrap(), seed).unwrap()
}

fn synthetic_config(mode: Mode, seed: u64) -> TrainConfig {
    let mut config = TrainConfig::new(mode);
    config.epochs = 20;
    config.batch_size = 256;
    config.encoder_hidden = vec![32, 8];
    config.adversary_hidden = vec![32, 32];
    config.lambda_max = 1.0;
    config.epsilon = 10.0;
    config.seed = seed;
    config
}

#[test]
fn acceptance_6_synthetic_skew_direction() {
    let mut failures = Vec::new();
    let mut adversarial_wins = 0usize;
    let mut federate_wins = 0usize;
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let dataset = skewed_synthetic(100 + seed);
        let uncon =
            train_run(&synthetic_config(Mode::Unconstrained, seed), &dataset).unwrap().result;
        let adv = train_run(&synthetic_config(Mode::Adversarial, seed), &dataset).unwrap().result;
        let fed = train_run(&synthetic_config(Mode::Federate, seed), &dataset).unwrap().result;
        if adv.test.gap < uncon.test.gap {
            adversarial_wins += 1;
        }
        if fed.test.gap < uncon.test.gap {
            federate_wins += 1;
        }
        lines.push(format!(
            "seed {seed}: gaps uncon {:.1} adv {:.1} fed {:.1}",
            uncon.test.gap, adv.test.gap, fed.test.gap
        ));
    }
    check(
        adversarial_wins >= 4,
        format!("adversarial beat unconstrained in only {adversarial_wins}/5 seeds ({lines:?})"),
        &mut failures,
    );
    check(
        federate_wins >= 4,
        format!("federate beat unconstrained in only {federate_wins}/5 seeds ({lines:?})"),
        &mut failures,
    );
    conclude(
        6,
        "synthetic skew protocol",
        outcome_of(
            failures,
            format!("adversarial {adversarial_wins}/5, federate {federate_wins}/5 seeds below unconstrained gap"),
        ),
    );
}

// ---------------------------------------------------------------------
// 7. MDL sanity.
// ---------------------------------------------------------------------

#[test]
fn acceptance_7_mdl_sanity() {
    let mut failures = Vec::new();
    let n = 4096usize;
    let mut r = rng::stream(700, 1);
    let reps = Matrix::from_fn(n, 16, |_, _| r.gen_range(-1.0..1.0));
    let z: Vec<usize> = (0..n).map(|_| r.gen_range(0..2usize)).collect();
    let random = mdl_online(&reps, &z, &ProbeConfig::with_seed(701)).unwrap();
    check(
        random.first_block_bits == 4.0,
        format!("first block cost {} != t1*log2(C) = 4", random.first_block_bits),
        &mut failures,
    );
    let ratio = random.mdl_bits / random.uniform_bits;
    check(
        (ratio - 1.0).abs() <= 0.05,
        format!("random-label MDL {:.1} bits is {ratio:.4}x uniform", random.mdl_bits),
        &mut failures,
    );
    let onehot = Matrix::from_fn(n, 2, |i, j| if z[i] == j { 1.0 } else { 0.0 });
    let revealing = mdl_online(&onehot, &z, &ProbeConfig::with_seed(702)).unwrap();
    check(
        revealing.mdl_bits <= 0.2 * revealing.uniform_bits,
        format!("one-hot MDL {:.1} bits exceeds 0.2x uniform", revealing.mdl_bits),
        &mut failures,
    );
    conclude(
        7,
        "MDL sanity",
        outcome_of(
            failures,
            format!(
                "random {:.1}/{} bits ({ratio:.3}x), one-hot {:.1} bits ({:.3}x), first block 4 bits",
                random.mdl_bits,
                random.uniform_bits,
                revealing.mdl_bits,
                revealing.mdl_bits / revealing.uniform_bits
            ),
        ),
    );
}

// ---------------------------------------------------------------------
// 8. Relaxation-threshold selection.
// ---------------------------------------------------------------------

#[test]
fn acceptance_8_rt_selection() {
    let mut failures = Vec::new();
    // A fixed synthetic sweep: one seed of federate over a small grid.
    let dataset = skewed_synthetic(400);
    let grid = SweepGrid {
        modes: vec![Mode::Federate],
        lambda_max: vec![0.1, 1.0, 2.0],
        epsilons: vec![8.0, 16.0],
        seeds: vec![0],
    };
    let mut base = synthetic_config(Mode::Federate, 0);
    base.epochs = 12;
    let configs = expand_grid(&grid, &base).unwrap();
    let runs: Vec<_> =
        configs.iter().map(|c| train_run(c, &dataset).unwrap().result).collect();

    let mut prev_gap = f64::INFINITY;
    let mut gaps = Vec::new();
    for rt in [0.0, 1.0, 3.0, 10.0] {
        let sel = select_with_rt(&runs, rt).unwrap();
        check(
            sel.chosen.val.gap <= prev_gap,
            format!("selected gap rose from {prev_gap} at rt {rt}"),
            &mut failures,
        );
        check(
            sel.chosen.val.acc >= sel.alpha_star - rt,
            format!("chosen accuracy {} outside the rt {rt} window", sel.chosen.val.acc),
            &mut failures,
        );
        prev_gap = sel.chosen.val.gap;
        gaps.push(sel.chosen.val.gap);
    }
    let rt0 = select_with_rt(&runs, 0.0).unwrap();
    let max_acc = runs.iter().map(|r| r.val.acc).fold(f64::NEG_INFINITY, f64::max);
    check(
        rt0.chosen.val.acc == max_acc,
        format!("rt 0 chose accuracy {} instead of the max {max_acc}", rt0.chosen.val.acc),
        &mut failures,
    );
    conclude(
        8,
        "relaxation-threshold selection",
        outcome_of(failures, format!("selected gaps over RT 0/1/3/10: {gaps:?}")),
    );
}

// ---------------------------------------------------------------------
// 9. Determinism.
// ---------------------------------------------------------------------

#[test]
fn acceptance_9_determinism() {
    let mut failures = Vec::new();
    let dataset = skewed_synthetic(500);
    let mut config = synthetic_config(Mode::Federate, 3);
    config.epochs = 6;
    let a = train_run(&config, &dataset).unwrap();
    let b = train_run(&config, &dataset).unwrap();
    let payload_a = serde_json::to_string(&a.result).unwrap();
    let payload_b = serde_json::to_string(&b.result).unwrap();
    check(payload_a == payload_b, "train payloads differ between invocations".into(), &mut failures);
    check(a.history == b.history, "histories differ between invocations".into(), &mut failures);

    let grid = SweepGrid {
        modes: vec![Mode::Unconstrained, Mode::Federate],
        lambda_max: vec![0.5],
        epsilons: vec![10.0],
        seeds: vec![0, 1],
    };
    let dir = tempfile::tempdir().unwrap();
    let (path_a, path_b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for path in [&path_a, &path_b] {
        sweep::run_sweep_to_file(&grid, &dataset, &config, path, 0, true).unwrap();
    }
    let bytes_a = std::fs::read(&path_a).unwrap();
    let bytes_b = std::fs::read(&path_b).unwrap();
    check(bytes_a == bytes_b, "sweep result files differ byte-for-byte".into(), &mut failures);
    conclude(
        9,
        "determinism",
        outcome_of(failures, format!("train payload {} bytes, sweep files identical", payload_a.len())),
    );
}
