//! Evaluation quantities: accuracy, TPR-gap and GRMS fairness, the post-hoc
//! leakage probe, and minimum description length via online coding.
//!
//! Leakage is the test accuracy of a freshly trained two-hidden-layer probe
//! that predicts the sensitive attribute from released representations. MDL
//! measures how much *effort* that extraction takes: labels are transmitted
//! in blocks, each coded by a probe trained on all preceding data, so the
//! total codelength grows when the attribute is hard to recover. Both
//! attack what a consumer actually sees — in private modes the
//! representations include fresh noise.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // float math comes from libm in no_std builds
use num_traits::Float;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::nn::{cross_entropy, AdamParams, AdamState, LayerStack};
use crate::rng::{self, tag};
use crate::train::{self, Mode, TrainConfig};

/// Fraction of exact prediction matches.
pub fn accuracy_eval(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(Error::Usage(format!(
            "accuracy needs equal non-empty inputs, got {} predictions and {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Signed true-positive-rate gap between the two sensitive groups:
/// `P_{z=1}(pred = positive | y = positive) - P_{z=0}(...)`.
///
/// Errors when either group has no positive-label instance (its TPR is
/// undefined), naming the offending group.
pub fn tpr_gap(
    predictions: &[usize],
    labels: &[usize],
    groups: &[usize],
    positive_class: usize,
) -> Result<f64> {
    if predictions.len() != labels.len() || predictions.len() != groups.len() {
        return Err(Error::Shape("predictions, labels, and groups must align".into()));
    }
    if groups.iter().any(|&g| g > 1) {
        return Err(Error::Usage("TPR-gap is defined for binary sensitive groups".into()));
    }
    let mut positives = [0usize; 2];
    let mut true_positives = [0usize; 2];
    for ((&p, &l), &g) in predictions.iter().zip(labels).zip(groups) {
        if l == positive_class {
            positives[g] += 1;
            if p == positive_class {
                true_positives[g] += 1;
            }
        }
    }
    for group in 0..2 {
        if positives[group] == 0 {
            return Err(Error::UndefinedGap { group });
        }
    }
    let tpr = |g: usize| true_positives[g] as f64 / positives[g] as f64;
    Ok(tpr(1) - tpr(0))
}

/// Root mean square of per-class TPR-gaps.
pub fn grms(per_class_gaps: &[f64]) -> Result<f64> {
    if per_class_gaps.is_empty() {
        return Err(Error::Usage("GRMS needs at least one class gap".into()));
    }
    let mean_sq: f64 =
        per_class_gaps.iter().map(|g| g * g).sum::<f64>() / per_class_gaps.len() as f64;
    Ok(mean_sq.sqrt())
}

/// Per-class signed gaps plus the reported scalar: `|TPR-gap|` of the
/// positive class for binary tasks, GRMS over all classes otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessScore {
    pub per_class_gaps: BTreeMap<usize, f64>,
    pub scalar: f64,
}

pub fn fairness_score(
    predictions: &[usize],
    labels: &[usize],
    groups: &[usize],
    n_classes: usize,
) -> Result<FairnessScore> {
    let mut per_class_gaps = BTreeMap::new();
    if n_classes == 2 {
        let gap = tpr_gap(predictions, labels, groups, 1)?;
        per_class_gaps.insert(1, gap);
        Ok(FairnessScore { per_class_gaps, scalar: gap.abs() })
    } else {
        for class in 0..n_classes {
            per_class_gaps.insert(class, tpr_gap(predictions, labels, groups, class)?);
        }
        let gaps: Vec<f64> = per_class_gaps.values().copied().collect();
        let scalar = grms(&gaps)?;
        Ok(FairnessScore { per_class_gaps, scalar })
    }
}

/// Hard predictions from logits (first index wins ties).
pub fn argmax_rows(logits: &Matrix) -> Vec<usize> {
    (0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            let mut best = 0usize;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Probe architecture and MDL blocking. The probe training recipe is fixed
/// (two hidden ReLU layers, Adam at 0.001 for 50 epochs, batches of up to
/// 256) so leakage and MDL are comparable across methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub hidden: Vec<usize>,
    /// Cumulative dataset fractions ending the online-coding blocks;
    /// strictly increasing, last entry 1.0.
    pub block_fractions: Vec<f64>,
    pub seed: u64,
}

/// Standard online-coding timesteps: 0.1%, 0.2%, ..., 50%, 100%.
pub const DEFAULT_BLOCK_FRACTIONS: [f64; 11] =
    [0.001, 0.002, 0.004, 0.008, 0.016, 0.032, 0.0625, 0.125, 0.25, 0.5, 1.0];

const PROBE_EPOCHS: usize = 50;
const PROBE_BATCH: usize = 256;
/// Predicted probabilities are clipped here before coding, so one saturated
/// wrong prediction cannot contribute unbounded bits.
const PROBE_PROB_FLOOR: f64 = 1e-15;

impl Default for ProbeConfig {
    fn default() -> ProbeConfig {
        ProbeConfig {
            hidden: alloc::vec![64, 64],
            block_fractions: DEFAULT_BLOCK_FRACTIONS.to_vec(),
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn with_seed(seed: u64) -> ProbeConfig {
        ProbeConfig { seed, ..ProbeConfig::default() }
    }

    /// Default probe with the leading block fractions that would round to
    /// zero rows on a `rows`-sized dataset dropped, so small desk-scale
    /// datasets keep a valid (coarser) online-coding schedule.
    pub fn adapted(seed: u64, rows: usize) -> ProbeConfig {
        let block_fractions: Vec<f64> = DEFAULT_BLOCK_FRACTIONS
            .iter()
            .copied()
            .filter(|f| (f * rows as f64).round() >= 1.0)
            .collect();
        ProbeConfig { block_fractions, ..ProbeConfig::with_seed(seed) }
    }

    fn validate(&self) -> Result<()> {
        if self.block_fractions.is_empty()
            || self.block_fractions.windows(2).any(|w| w[0] >= w[1])
            || self.block_fractions[0] <= 0.0
            || *self.block_fractions.last().unwrap() != 1.0
        {
            return Err(Error::Param(
                "block fractions must be strictly increasing, positive, and end at 1.0".into(),
            ));
        }
        Ok(())
    }
}

/// Trains a fresh probe classifier on `(features, labels)`.
///
/// With `holdout_stop`, the last tenth of the rows is held out and the
/// parameters with the best holdout loss are kept (the untrained model is a
/// candidate, so an unlearnable task codes near-uniformly); training stops
/// once the holdout has not improved for 5 epochs. Coding probes need this
/// calibration guard; the leakage probe trains the full budget, since only
/// its argmax matters.
fn train_probe(
    features: &Matrix,
    labels: &[usize],
    n_classes: usize,
    hidden: &[usize],
    seed: u64,
    holdout_stop: bool,
) -> Result<LayerStack> {
    let n = features.rows();
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(features.cols());
    dims.extend_from_slice(hidden);
    dims.push(n_classes);
    let mut stack = LayerStack::mlp(&dims, 0.0, &mut rng::stream(seed, tag::INIT_CLASSIFIER))?;
    let mut adam = AdamState::new(&stack, AdamParams::default());
    let mut shuffle = rng::stream(seed, tag::SHUFFLE);

    // A single-row training set has nothing to hold out; train it straight.
    let holdout_stop = holdout_stop && n >= 2;
    let holdout_n = if holdout_stop { (n / 10).max(1).min(n - 1) } else { 0 };
    let train_n = n - holdout_n;
    let holdout: Vec<usize> = (train_n..n).collect();
    let holdout_x = features.select_rows(&holdout);
    let holdout_y: Vec<usize> = holdout.iter().map(|&i| labels[i]).collect();
    let holdout_loss = |stack: &LayerStack| -> Result<f64> {
        let logits = stack.forward_eval(&holdout_x)?;
        Ok(cross_entropy(&logits, &holdout_y)?.0)
    };

    let mut best = if holdout_stop { Some((holdout_loss(&stack)?, stack.clone())) } else { None };
    let mut stale_epochs = 0usize;
    let mut order: Vec<usize> = (0..train_n.max(1)).collect();
    for epoch in 0..PROBE_EPOCHS {
        order.shuffle(&mut shuffle);
        for (batch_index, chunk) in order.chunks(PROBE_BATCH).enumerate() {
            let x = features.select_rows(chunk);
            let y: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (logits, tape) = stack.forward_train(&x, &mut shuffle)?;
            let (loss, grad) = cross_entropy(&logits, &y)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, batch: batch_index });
            }
            let (grads, _) = stack.backward(&tape, &grad)?;
            adam.apply(&mut stack, &grads)?;
        }
        if let Some((best_loss, best_stack)) = &mut best {
            let loss = holdout_loss(&stack)?;
            if loss < *best_loss {
                *best_loss = loss;
                *best_stack = stack.clone();
                stale_epochs = 0;
            } else {
                stale_epochs += 1;
                if stale_epochs >= 5 {
                    break;
                }
            }
        }
    }
    Ok(match best {
        Some((_, best_stack)) => best_stack,
        None => stack,
    })
}

fn distinct_count(labels: &[usize]) -> usize {
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Accuracy of a freshly trained probe predicting the sensitive attribute:
/// trained on the first representation set, evaluated on the second.
pub fn leakage_probe(
    train_reps: &Matrix,
    train_z: &[usize],
    test_reps: &Matrix,
    test_z: &[usize],
    probe: &ProbeConfig,
) -> Result<f64> {
    if train_reps.rows() != train_z.len() || test_reps.rows() != test_z.len() {
        return Err(Error::Shape("representations and attributes must align".into()));
    }
    if train_reps.rows() == 0 || test_reps.rows() == 0 {
        return Err(Error::Usage("leakage probe needs non-empty train and test sets".into()));
    }
    if distinct_count(train_z) < 2 {
        return Err(Error::DegenerateInput(
            "probe training attributes contain a single class".into(),
        ));
    }
    let n_groups = 1 + train_z.iter().chain(test_z).copied().max().unwrap_or(0);
    let stack = train_probe(train_reps, train_z, n_groups, &probe.hidden, probe.seed, false)?;
    let preds = argmax_rows(&stack.forward_eval(test_reps)?);
    accuracy_eval(&preds, test_z)
}

/// Result of online-coding MDL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdlReport {
    /// Total codelength in bits: uniform code for the first block plus the
    /// probe codelength of every later block.
    pub mdl_bits: f64,
    /// `n * log2(C)`: the cost of coding every label uniformly.
    pub uniform_bits: f64,
    /// `t_1 * log2(C)`: the first block is always uniform-coded.
    pub first_block_bits: f64,
    /// Cumulative block boundaries (row counts) after rounding.
    pub boundaries: Vec<usize>,
    /// Per-block probe codelengths, aligned with `boundaries[1..]`.
    pub block_bits: Vec<f64>,
}

/// Online-coding MDL of the sensitive attribute given representations.
///
/// Rows are shuffled once (seeded), block boundaries come from the probe's
/// cumulative fractions rounded to row counts (at least one row per block),
/// and each block is coded by a probe trained from scratch on all preceding
/// rows, with a per-block derived seed. Probe probabilities are clipped at
/// `1e-15` before taking the Shannon codelength.
pub fn mdl_online(reps: &Matrix, z: &[usize], probe: &ProbeConfig) -> Result<MdlReport> {
    probe.validate()?;
    let n = reps.rows();
    if n != z.len() {
        return Err(Error::Shape("representations and attributes must align".into()));
    }
    if n < 2 {
        return Err(Error::Usage("MDL needs at least two rows".into()));
    }
    if distinct_count(z) < 2 {
        return Err(Error::DegenerateInput("attributes contain a single class".into()));
    }
    let n_groups = 1 + z.iter().copied().max().unwrap_or(0);
    let log2_c = (n_groups as f64).log2();

    let first = (probe.block_fractions[0] * n as f64).round() as usize;
    if first == 0 {
        return Err(Error::Param(format!(
            "first block fraction {} rounds to zero rows on {n} samples",
            probe.block_fractions[0]
        )));
    }
    let mut boundaries: Vec<usize> = Vec::with_capacity(probe.block_fractions.len());
    for &fraction in &probe.block_fractions {
        let rounded = (fraction * n as f64).round() as usize;
        let lower = boundaries.last().map_or(0, |&b| b + 1);
        let t = rounded.max(lower).min(n);
        if boundaries.last() == Some(&t) {
            return Err(Error::Usage(format!(
                "dataset of {n} rows is too small for {} block fractions",
                probe.block_fractions.len()
            )));
        }
        boundaries.push(t);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(probe.seed, tag::MDL));

    let first_block_bits = boundaries[0] as f64 * log2_c;
    let mut mdl_bits = first_block_bits;
    let mut block_bits = Vec::with_capacity(boundaries.len() - 1);
    let max_bits = -PROBE_PROB_FLOOR.log2();
    for k in 0..boundaries.len() - 1 {
        let (t_lo, t_hi) = (boundaries[k], boundaries[k + 1]);
        let train_idx = &order[..t_lo];
        let eval_idx = &order[t_lo..t_hi];
        let train_x = reps.select_rows(train_idx);
        let train_y: Vec<usize> = train_idx.iter().map(|&i| z[i]).collect();
        let block_seed = rng::derive_seed(probe.seed, 1000 + k as u64);
        // A prefix holding a single class still yields a valid (confident)
        // coding model, so no degeneracy check here.
        let stack = train_probe(&train_x, &train_y, n_groups, &probe.hidden, block_seed, true)?;
        let logits = stack.forward_eval(&reps.select_rows(eval_idx))?;
        let mut bits = 0.0;
        for (row, &i) in eval_idx.iter().enumerate() {
            let r = logits.row(row);
            let max = r.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let lse = max + r.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            bits += ((lse - r[z[i]]) / core::f64::consts::LN_2).min(max_bits);
        }
        mdl_bits += bits;
        block_bits.push(bits);
    }

    Ok(MdlReport {
        mdl_bits,
        uniform_bits: n as f64 * log2_c,
        first_block_bits,
        boundaries,
        block_bits,
    })
}

/// Privacy metrics of one representation release; halves are optional so
/// the standalone probe/MDL entry points can each fill their own.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrivacyScore {
    pub leakage: Option<f64>,
    pub mdl_bits: Option<f64>,
    pub uniform_bits: Option<f64>,
}

/// Row label in result payloads: the trainable modes plus the analytic
/// random-guessing reference. Ordering matches the report layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Random,
    Unconstrained,
    Noise,
    Adversarial,
    Federate,
}

impl From<Mode> for Method {
    fn from(mode: Mode) -> Method {
        match mode {
            Mode::Unconstrained => Method::Unconstrained,
            Mode::Noise => Method::Noise,
            Mode::Adversarial => Method::Adversarial,
            Mode::Federate => Method::Federate,
        }
    }
}

impl Method {
    pub fn display_name(&self) -> &'static str {
        match self {
            Method::Random => "Random",
            Method::Unconstrained => "Unconstrained",
            Method::Noise => "Noise",
            Method::Adversarial => "Adversarial",
            Method::Federate => "FEDERATE",
        }
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.display_name())
    }
}

/// Validation metrics, in percentage points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub acc: f64,
    pub gap: f64,
}

/// Test metrics, in percentage points (MDL in raw bits).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestMetrics {
    pub acc: f64,
    pub gap: f64,
    /// Probe accuracy; absent for the random reference row.
    pub leakage: Option<f64>,
    pub mdl_bits: f64,
    pub uniform_bits: f64,
}

/// One run's evaluation, keyed by its hyperparameters and seed.
/// Accuracy, gap, and leakage are percentages; MDL is raw bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub mode: Method,
    /// Privacy budget; `None` in modes without the privacy layer.
    pub epsilon: Option<f64>,
    /// Schedule ceiling; `None` in modes without an adversary.
    pub lambda_max: Option<f64>,
    pub seed: u64,
    pub val: SplitMetrics,
    pub test: TestMetrics,
}

fn pct(fraction: f64) -> f64 {
    100.0 * fraction
}

/// Evaluates a trained model: task accuracy and fairness from classifier
/// predictions on released representations (fresh noise in private modes),
/// leakage from a probe trained on validation representations and evaluated
/// on test representations, and MDL over the test representations.
pub fn evaluate_run(
    model: &crate::nn::ModelParams,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<RunResult> {
    let privacy = config.privacy()?;
    let n_classes = dataset.n_classes();
    let valid = dataset.split_data(Split::Valid);
    let test = dataset.split_data(Split::Test);
    if valid.features.rows() == 0 || test.features.rows() == 0 {
        return Err(Error::Usage("evaluation needs non-empty valid and test splits".into()));
    }

    // Evaluation draws its own streams, disjoint from the training run's.
    let eval_seed = rng::derive_seed(config.seed, tag::EVAL_NOISE);
    let mut val_rng = rng::stream(eval_seed, 1);
    let mut test_rng = rng::stream(eval_seed, 2);
    let mut probe_train_rng = rng::stream(eval_seed, 3);
    let mut probe_test_rng = rng::stream(eval_seed, 4);

    let val_preds = train::predict_eval(model, &valid.features, privacy.as_ref(), &mut val_rng)?;
    let val = SplitMetrics {
        acc: pct(accuracy_eval(&val_preds, &valid.labels)?),
        gap: pct(fairness_score(&val_preds, &valid.labels, &valid.sensitive, n_classes)?.scalar),
    };
    let test_preds = train::predict_eval(model, &test.features, privacy.as_ref(), &mut test_rng)?;
    let test_acc = pct(accuracy_eval(&test_preds, &test.labels)?);
    let test_gap =
        pct(fairness_score(&test_preds, &test.labels, &test.sensitive, n_classes)?.scalar);

    // The attacker sees released representations: valid reps train the
    // probe, test reps are attacked and coded.
    let valid_reps =
        train::encode_eval(model, &valid.features, privacy.as_ref(), &mut probe_train_rng)?;
    let test_reps =
        train::encode_eval(model, &test.features, privacy.as_ref(), &mut probe_test_rng)?;
    let leak_probe = ProbeConfig::with_seed(rng::derive_seed(config.seed, tag::LEAKAGE_PROBE));
    let leakage = pct(leakage_probe(
        &valid_reps,
        &valid.sensitive,
        &test_reps,
        &test.sensitive,
        &leak_probe,
    )?);
    let mdl_probe =
        ProbeConfig::adapted(rng::derive_seed(config.seed, tag::MDL), test_reps.rows());
    let mdl = mdl_online(&test_reps, &test.sensitive, &mdl_probe)?;

    Ok(RunResult {
        mode: config.mode.into(),
        epsilon: if config.mode.uses_privacy() { Some(config.epsilon) } else { None },
        lambda_max: if config.mode.uses_adversary() { Some(config.lambda_max) } else { None },
        seed: config.seed,
        val,
        test: TestMetrics {
            acc: test_acc,
            gap: test_gap,
            leakage: Some(leakage),
            mdl_bits: mdl.mdl_bits,
            uniform_bits: mdl.uniform_bits,
        },
    })
}

/// The analytic random-guessing reference row: accuracy `100/C`, gap 0, no
/// leakage entry, and MDL measured on representations that carry no signal
/// (i.i.d. Gaussian), which anchors the dataset's MDL upper bound.
pub fn random_baseline(dataset: &Dataset, rep_dim: usize, seed: u64) -> Result<RunResult> {
    let test = dataset.split_data(Split::Test);
    if test.features.rows() == 0 {
        return Err(Error::Usage("random baseline needs a non-empty test split".into()));
    }
    let n_classes = dataset.n_classes();
    if n_classes == 0 {
        return Err(Error::Usage("random baseline needs labeled data".into()));
    }
    let mut noise_rng = rng::stream(seed, tag::RANDOM_BASELINE);
    let reps = Matrix::from_fn(test.features.rows(), rep_dim, |_, _| {
        rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut noise_rng)
    });
    let probe = ProbeConfig::adapted(rng::derive_seed(seed, tag::MDL), reps.rows());
    let mdl = mdl_online(&reps, &test.sensitive, &probe)?;
    let acc = 100.0 / n_classes as f64;
    Ok(RunResult {
        mode: Method::Random,
        epsilon: None,
        lambda_max: None,
        seed,
        val: SplitMetrics { acc, gap: 0.0 },
        test: TestMetrics {
            acc,
            gap: 0.0,
            leakage: None,
            mdl_bits: mdl.mdl_bits,
            uniform_bits: mdl.uniform_bits,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn accuracy_counts_exact_matches() {
        assert_eq!(accuracy_eval(&[1, 1, 1], &[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(accuracy_eval(&[0, 1, 1, 0], &[0, 1, 0, 0]).unwrap(), 0.75);
        assert!(accuracy_eval(&[], &[]).is_err());
    }

    #[test]
    fn random_predictions_concentrate_at_chance() {
        use rand::Rng;
        let mut r = crate::rng::stream(55, 1);
        let preds: Vec<usize> = (0..100_000).map(|_| r.gen_range(0..2usize)).collect();
        let labels: Vec<usize> = (0..100_000).map(|_| r.gen_range(0..2usize)).collect();
        let acc = accuracy_eval(&preds, &labels).unwrap();
        assert!((acc - 0.5).abs() <= 0.01, "accuracy {acc}");
    }

    #[test]
    fn tpr_gap_hand_counted_example() {
        // Group 1: 4 positives, 3 predicted positive (TPR 0.75).
        // Group 0: 4 positives, 2 predicted positive (TPR 0.50).
        let labels = vec![1, 1, 1, 1, 1, 1, 1, 1, 0, 0];
        let groups = vec![1, 1, 1, 1, 0, 0, 0, 0, 1, 0];
        let preds = vec![1, 1, 1, 0, 1, 1, 0, 0, 0, 1];
        let gap = tpr_gap(&preds, &labels, &groups, 1).unwrap();
        assert!((gap - 0.25).abs() < 1e-12);
    }

    #[test]
    fn tpr_gap_zero_for_symmetric_and_perfect_predictions() {
        let labels = vec![1, 0, 1, 0];
        let groups = vec![0, 0, 1, 1];
        // Identical behaviour per group.
        assert_eq!(tpr_gap(&[1, 0, 1, 0], &labels, &groups, 1).unwrap(), 0.0);
        // All predictions equal labels: both TPRs are 1.
        assert_eq!(tpr_gap(&labels, &labels, &groups, 1).unwrap(), 0.0);
    }

    #[test]
    fn tpr_gap_relabeling_groups_flips_sign() {
        let labels = vec![1, 1, 1, 1];
        let groups = vec![1, 1, 0, 0];
        let flipped = vec![0, 0, 1, 1];
        let preds = vec![1, 1, 1, 0];
        let a = tpr_gap(&preds, &labels, &groups, 1).unwrap();
        let b = tpr_gap(&preds, &labels, &flipped, 1).unwrap();
        assert!((a + b).abs() < 1e-12);
        assert!((a.abs() - b.abs()).abs() < 1e-12);
    }

    #[test]
    fn tpr_gap_errors_name_the_empty_group() {
        let labels = vec![1, 1, 0, 0];
        let groups = vec![1, 1, 0, 0];
        let preds = vec![1, 1, 0, 0];
        let err = tpr_gap(&preds, &labels, &groups, 1).unwrap_err();
        assert_eq!(err, Error::UndefinedGap { group: 0 });
    }

    #[test]
    fn grms_direct_cases() {
        assert!((grms(&[0.3, 0.4]).unwrap() - 0.125f64.sqrt()).abs() < 1e-12);
        assert_eq!(grms(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(grms(&[-0.7]).unwrap(), 0.7);
        assert!(grms(&[]).is_err());
    }

    #[test]
    fn grms_is_permutation_invariant() {
        let a = grms(&[0.1, -0.5, 0.3, 0.2]).unwrap();
        let b = grms(&[0.3, 0.2, 0.1, -0.5]).unwrap();
        assert_eq!(a, b);
    }

    fn one_hot_of(z: &[usize]) -> Matrix {
        Matrix::from_fn(z.len(), 2, |i, j| if z[i] == j { 1.0 } else { 0.0 })
    }

    #[test]
    fn leakage_of_one_hot_attributes_is_near_one() {
        let train_z: Vec<usize> = (0..600).map(|i| i % 2).collect();
        let test_z: Vec<usize> = (0..400).map(|i| (i / 2) % 2).collect();
        let leak = leakage_probe(
            &one_hot_of(&train_z),
            &train_z,
            &one_hot_of(&test_z),
            &test_z,
            &ProbeConfig::with_seed(3),
        )
        .unwrap();
        assert!(leak >= 0.99, "leakage {leak}");
    }

    #[test]
    fn single_class_probe_training_is_degenerate() {
        let z = vec![0usize; 50];
        let err =
            leakage_probe(&one_hot_of(&z), &z, &one_hot_of(&z), &z, &ProbeConfig::default())
                .unwrap_err();
        assert!(matches!(err, Error::DegenerateInput(_)));
    }

    #[test]
    fn mdl_first_block_is_uniform_coded() {
        // n = 20, fractions {0.5, 1.0}: t1 = 10, C = 2 -> exactly 10 bits.
        let z: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let reps = one_hot_of(&z);
        let probe =
            ProbeConfig { hidden: vec![8], block_fractions: vec![0.5, 1.0], seed: 11 };
        let report = mdl_online(&reps, &z, &probe).unwrap();
        assert_eq!(report.first_block_bits, 10.0);
        assert_eq!(report.uniform_bits, 20.0);
        assert_eq!(report.boundaries, vec![10, 20]);
        assert!(report.mdl_bits >= report.first_block_bits);
    }

    #[test]
    fn mdl_rejects_first_block_rounding_to_zero() {
        let z: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let reps = one_hot_of(&z);
        let probe =
            ProbeConfig { hidden: vec![8], block_fractions: vec![0.001, 1.0], seed: 0 };
        assert!(matches!(mdl_online(&reps, &z, &probe), Err(Error::Param(_))));
    }

    #[test]
    fn method_ordering_matches_report_layout() {
        let mut methods = vec![
            Method::Federate,
            Method::Random,
            Method::Adversarial,
            Method::Unconstrained,
            Method::Noise,
        ];
        methods.sort();
        assert_eq!(
            methods,
            vec![
                Method::Random,
                Method::Unconstrained,
                Method::Noise,
                Method::Adversarial,
                Method::Federate
            ]
        );
    }
}
