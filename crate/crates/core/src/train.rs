//! The min-max training loop.
//!
//! Each batch is encoded, passed through the privacy layer (L1
//! normalization plus fresh Laplace noise in the private modes), and then
//! consumed twice: the adversary is updated on its own cross-entropy
//! `L(z, z_hat)`, and the encoder and classifier are updated on
//! `L(y, y_hat) - lambda_i * L(z, z_hat)`, with the adversarial term flowing
//! back through the gradient reversal layer. Baselines are mode switches:
//! `unconstrained` drops both extras, `noise` keeps only the privacy layer,
//! `adversarial` keeps only the adversary.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // float math comes from libm in no_std builds
use num_traits::Float;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split, SplitData};
use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::metrics::{self, RunResult};
use crate::nn::{
    cross_entropy, grad_reverse_backward, AdamParams, AdamState, LayerStack, ModelParams,
};
use crate::privacy::{self, PrivacyParams};
use crate::rng::{self, tag};

/// Which variant of the objective a run optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Task loss only; representations released raw.
    Unconstrained,
    /// Privacy layer only (corrected DP mechanism), no adversary.
    Noise,
    /// Adversary only, no privacy layer.
    Adversarial,
    /// Privacy layer plus adversary.
    Federate,
}

impl Mode {
    /// Whether representations pass through normalize-plus-noise. The
    /// baselines without the privacy layer release raw encoder output.
    pub fn uses_privacy(&self) -> bool {
        matches!(self, Mode::Noise | Mode::Federate)
    }

    pub fn uses_adversary(&self) -> bool {
        matches!(self, Mode::Adversarial | Mode::Federate)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Unconstrained => "unconstrained",
            Mode::Noise => "noise",
            Mode::Adversarial => "adversarial",
            Mode::Federate => "federate",
        }
    }
}

impl core::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "unconstrained" => Ok(Mode::Unconstrained),
            "noise" => Ok(Mode::Noise),
            "adversarial" => Ok(Mode::Adversarial),
            "federate" => Ok(Mode::Federate),
            other => Err(Error::Param(format!(
                "unknown mode '{other}' (expected unconstrained|noise|adversarial|federate)"
            ))),
        }
    }
}

impl core::fmt::Display for Mode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optimizer settings, the lambda schedule, the privacy budget, and the
/// network layout for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Ceiling of the lambda schedule (adversarial modes only).
    pub lambda_max: f64,
    /// Maps epoch progress to `p_i = schedule_scale * epoch / epochs`.
    pub schedule_scale: f64,
    /// Privacy budget (private modes only).
    pub epsilon: f64,
    pub seed: u64,
    /// Encoder layer widths; the last entry is the representation dim `D`.
    pub encoder_hidden: Vec<usize>,
    /// Classifier hidden widths between `D` and the class logits
    /// (empty = linear classifier).
    pub classifier_hidden: Vec<usize>,
    /// Adversary hidden widths between `D` and the group logits.
    pub adversary_hidden: Vec<usize>,
    pub dropout: f64,
}

impl TrainConfig {
    /// Defaults: Adam at 0.001, batches of 2000, dropout 0.1, a two-layer
    /// encoder, a linear classifier, and a three-layer adversary.
    pub fn new(mode: Mode) -> TrainConfig {
        TrainConfig {
            mode,
            lr: 0.001,
            batch_size: 2000,
            epochs: 30,
            lambda_max: 1.0,
            schedule_scale: 10.0,
            epsilon: 10.0,
            seed: 0,
            encoder_hidden: alloc::vec![64, 16],
            classifier_hidden: Vec::new(),
            adversary_hidden: alloc::vec![64, 64],
            dropout: 0.1,
        }
    }

    pub fn rep_dim(&self) -> usize {
        *self.encoder_hidden.last().expect("encoder_hidden validated non-empty")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::Param(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::Param("batch size must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Param("epoch count must be positive".into()));
        }
        if self.lambda_max < 0.0 {
            return Err(Error::Param(format!("lambda_max must be >= 0, got {}", self.lambda_max)));
        }
        if !(self.schedule_scale > 0.0) {
            return Err(Error::Param("schedule_scale must be positive".into()));
        }
        if self.mode.uses_privacy() && !(self.epsilon > 0.0) {
            return Err(Error::Param(format!(
                "mode {} needs a positive epsilon, got {}",
                self.mode, self.epsilon
            )));
        }
        if self.encoder_hidden.is_empty() {
            return Err(Error::Param("encoder needs at least one layer width".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Param(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }

    /// Privacy parameters for this run, if the mode uses the privacy layer.
    pub fn privacy(&self) -> Result<Option<PrivacyParams>> {
        if self.mode.uses_privacy() {
            Ok(Some(PrivacyParams::new(self.epsilon, self.rep_dim())?))
        } else {
            Ok(None)
        }
    }
}

/// One line of the per-epoch training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub class_loss: f64,
    /// Adversary training loss; 0 in modes without an adversary.
    pub adv_loss: f64,
    pub lambda_effective: f64,
    pub val_accuracy: f64,
    pub val_gap: f64,
}

pub type TrainHistory = Vec<EpochRecord>;

/// Effective adversarial weight for an epoch:
/// `lambda_max * (2 / (1 + exp(-p)) - 1)` with
/// `p = schedule_scale * epoch_index / epochs`. Monotone non-decreasing,
/// zero at epoch 0, approaching `lambda_max` from below.
pub fn lambda_schedule(epoch_index: usize, config: &TrainConfig) -> f64 {
    let p = config.schedule_scale * epoch_index as f64 / config.epochs as f64;
    config.lambda_max * (2.0 / (1.0 + (-p).exp()) - 1.0)
}

/// The independent RNG streams of one run. One stream per consumer, so
/// removing a consumer (a baseline without noise or adversary) leaves every
/// other stream's draws unchanged.
pub struct RunRngs {
    pub shuffle: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub dropout_encoder: ChaCha8Rng,
    pub dropout_classifier: ChaCha8Rng,
    pub dropout_adversary: ChaCha8Rng,
    pub eval_noise: ChaCha8Rng,
}

impl RunRngs {
    pub fn new(seed: u64) -> RunRngs {
        RunRngs {
            shuffle: rng::stream(seed, tag::SHUFFLE),
            noise: rng::stream(seed, tag::NOISE),
            dropout_encoder: rng::stream(seed, tag::DROPOUT_ENCODER),
            dropout_classifier: rng::stream(seed, tag::DROPOUT_CLASSIFIER),
            dropout_adversary: rng::stream(seed, tag::DROPOUT_ADVERSARY),
            eval_noise: rng::stream(seed, tag::EVAL_NOISE),
        }
    }
}

/// Adam state per stack.
pub struct AdamStates {
    pub encoder: AdamState,
    pub classifier: AdamState,
    pub adversary: AdamState,
}

impl AdamStates {
    pub fn new(model: &ModelParams, lr: f64) -> AdamStates {
        let hyper = AdamParams::with_lr(lr);
        AdamStates {
            encoder: AdamState::new(&model.encoder, hyper),
            classifier: AdamState::new(&model.classifier, hyper),
            adversary: AdamState::new(&model.adversary, hyper),
        }
    }
}

/// Glorot-initializes the three stacks for `config` on a dataset with
/// `in_dim` features, `n_classes` task classes, and `n_groups` sensitive
/// groups. Each stack draws from its own seeded stream.
pub fn build_model(
    config: &TrainConfig,
    in_dim: usize,
    n_classes: usize,
    n_groups: usize,
) -> Result<ModelParams> {
    config.validate()?;
    let rep_dim = config.rep_dim();
    let mut enc_dims = Vec::with_capacity(config.encoder_hidden.len() + 1);
    enc_dims.push(in_dim);
    enc_dims.extend_from_slice(&config.encoder_hidden);
    let mut cls_dims = Vec::with_capacity(config.classifier_hidden.len() + 2);
    cls_dims.push(rep_dim);
    cls_dims.extend_from_slice(&config.classifier_hidden);
    cls_dims.push(n_classes);
    let mut adv_dims = Vec::with_capacity(config.adversary_hidden.len() + 2);
    adv_dims.push(rep_dim);
    adv_dims.extend_from_slice(&config.adversary_hidden);
    adv_dims.push(n_groups);

    let encoder = LayerStack::mlp(
        &enc_dims,
        config.dropout,
        &mut rng::stream(config.seed, tag::INIT_ENCODER),
    )?;
    let classifier = LayerStack::mlp(
        &cls_dims,
        config.dropout,
        &mut rng::stream(config.seed, tag::INIT_CLASSIFIER),
    )?;
    let adversary = LayerStack::mlp(
        &adv_dims,
        config.dropout,
        &mut rng::stream(config.seed, tag::INIT_ADVERSARY),
    )?;
    ModelParams::new(encoder, classifier, adversary)
}

fn check_finite(loss: f64, epoch: usize, batch: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged { epoch, batch })
    }
}

/// Runs one epoch of updates over shuffled batches and returns
/// `(mean class loss, mean adversary loss, lambda_i)`.
///
/// Per batch: encode in train mode, privatize in the private modes (one
/// noise draw per row, shared by both heads), update the adversary on its
/// own loss, then update encoder and classifier on the combined objective
/// with the adversarial gradient reversed. The last partial batch is
/// processed, not dropped.
pub fn train_epoch(
    model: &mut ModelParams,
    states: &mut AdamStates,
    train: &SplitData,
    config: &TrainConfig,
    epoch_index: usize,
    rngs: &mut RunRngs,
) -> Result<(f64, f64, f64)> {
    let n = train.features.rows();
    if n == 0 {
        return Err(Error::Usage("cannot train on an empty split".into()));
    }
    let privacy = config.privacy()?;
    let lambda_i =
        if config.mode.uses_adversary() { lambda_schedule(epoch_index, config) } else { 0.0 };

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rngs.shuffle);

    let mut class_loss_sum = 0.0;
    let mut adv_loss_sum = 0.0;
    for (batch_index, chunk) in order.chunks(config.batch_size).enumerate() {
        let x = train.features.select_rows(chunk);
        let y: Vec<usize> = chunk.iter().map(|&i| train.labels[i]).collect();
        let z: Vec<usize> = chunk.iter().map(|&i| train.sensitive[i]).collect();

        let (enc_out, enc_tape) = model.encoder.forward_train(&x, &mut rngs.dropout_encoder)?;
        let rep = match &privacy {
            Some(p) => privacy::privatize_rows(&enc_out, p, &mut rngs.noise)?,
            None => enc_out.clone(),
        };

        // Adversary first, on the un-reversed gradient of its own loss.
        if config.mode.uses_adversary() {
            let (logits, tape) =
                model.adversary.forward_train(&rep, &mut rngs.dropout_adversary)?;
            let (loss, grad) = cross_entropy(&logits, &z)?;
            check_finite(loss, epoch_index, batch_index)?;
            adv_loss_sum += loss * chunk.len() as f64;
            let (grads, _) = model.adversary.backward(&tape, &grad)?;
            states.adversary.apply(&mut model.adversary, &grads)?;
        }

        // Encoder + classifier on L_class - lambda_i * L_adv.
        let (logits, cls_tape) =
            model.classifier.forward_train(&rep, &mut rngs.dropout_classifier)?;
        let (loss, grad) = cross_entropy(&logits, &y)?;
        check_finite(loss, epoch_index, batch_index)?;
        class_loss_sum += loss * chunk.len() as f64;
        let (cls_grads, mut rep_grad) = model.classifier.backward(&cls_tape, &grad)?;
        if config.mode.uses_adversary() {
            let (adv_logits, adv_tape) =
                model.adversary.forward_train(&rep, &mut rngs.dropout_adversary)?;
            let (adv_loss, adv_grad) = cross_entropy(&adv_logits, &z)?;
            check_finite(adv_loss, epoch_index, batch_index)?;
            let (_, rep_grad_adv) = model.adversary.backward(&adv_tape, &adv_grad)?;
            rep_grad.add_assign(&grad_reverse_backward(&rep_grad_adv, lambda_i));
        }
        let enc_upstream = if privacy.is_some() {
            // Noise is an additive constant; only the normalization has a
            // Jacobian.
            privacy::l1_normalize_backward_rows(&enc_out, &rep_grad)
        } else {
            rep_grad
        };
        let (enc_grads, _) = model.encoder.backward(&enc_tape, &enc_upstream)?;
        states.classifier.apply(&mut model.classifier, &cls_grads)?;
        states.encoder.apply(&mut model.encoder, &enc_grads)?;
    }

    Ok((class_loss_sum / n as f64, adv_loss_sum / n as f64, lambda_i))
}

/// Evaluation-mode representations as released to a consumer: deterministic
/// encoder output, privatized with fresh noise when `privacy` is set.
pub fn encode_eval<R: rand::Rng + ?Sized>(
    model: &ModelParams,
    features: &Matrix,
    privacy: Option<&PrivacyParams>,
    rng: &mut R,
) -> Result<Matrix> {
    let rep = model.encoder.forward_eval(features)?;
    match privacy {
        Some(p) => privacy::privatize_rows(&rep, p, rng),
        None => Ok(rep),
    }
}

fn argmax_rows(logits: &Matrix) -> Vec<usize> {
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

/// Task predictions from the released representations.
pub fn predict_eval<R: rand::Rng + ?Sized>(
    model: &ModelParams,
    features: &Matrix,
    privacy: Option<&PrivacyParams>,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let rep = encode_eval(model, features, privacy, rng)?;
    let logits = model.classifier.forward_eval(&rep)?;
    Ok(argmax_rows(&logits))
}

/// A completed run: final-epoch parameters, the per-epoch log, and the
/// metrics bundle.
#[derive(Debug)]
pub struct TrainOutcome {
    pub model: ModelParams,
    pub history: TrainHistory,
    pub result: RunResult,
}

/// Trains for `config.epochs` epochs and evaluates the final-epoch
/// parameters (no early stopping; cross-run selection happens later).
pub fn train_run(config: &TrainConfig, dataset: &Dataset) -> Result<TrainOutcome> {
    config.validate()?;
    dataset.check_train_coverage()?;
    let train = dataset.split_data(Split::Train);
    let valid = dataset.split_data(Split::Valid);
    if valid.features.rows() == 0 {
        return Err(Error::Usage("dataset has no validation split".into()));
    }
    let n_classes = dataset.n_classes();
    let n_groups = dataset.n_groups();
    let mut model = build_model(config, dataset.dim(), n_classes, n_groups)?;
    let mut states = AdamStates::new(&model, config.lr);
    let mut rngs = RunRngs::new(config.seed);
    let privacy = config.privacy()?;

    let mut history = TrainHistory::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (class_loss, adv_loss, lambda_effective) =
            train_epoch(&mut model, &mut states, &train, config, epoch, &mut rngs)?;
        let preds =
            predict_eval(&model, &valid.features, privacy.as_ref(), &mut rngs.eval_noise)?;
        let val_accuracy = metrics::accuracy_eval(&preds, &valid.labels)?;
        let val_gap =
            metrics::fairness_score(&preds, &valid.labels, &valid.sensitive, n_classes)?.scalar;
        history.push(EpochRecord {
            epoch,
            class_loss,
            adv_loss,
            lambda_effective,
            val_accuracy,
            val_gap,
        });
    }

    let result = metrics::evaluate_run(&model, dataset, config)?;
    Ok(TrainOutcome { model, history, result })
}

/// Serializes one history record per line (JSON Lines), with a fixed field
/// order so log payloads are byte-stable.
pub fn history_to_jsonl(history: &TrainHistory) -> String {
    let mut out = String::new();
    for r in history {
        out.push_str(&format!(
            "{{\"epoch\":{},\"class_loss\":{},\"adv_loss\":{},\"lambda_effective\":{},\"val_accuracy\":{},\"val_gap\":{}}}\n",
            r.epoch, r.class_loss, r.adv_loss, r.lambda_effective, r.val_accuracy, r.val_gap
        ));
    }
    out
}
