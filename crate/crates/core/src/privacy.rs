//! The differentially private representation layer.
//!
//! A representation `v` is released as `v/||v||_1 + noise` with per-dimension
//! centered Laplace noise at scale `2/epsilon`. Because every normalized
//! vector lies on the L1 unit sphere, the triangle inequality bounds the L1
//! sensitivity of the normalized encoder by 2, and the Laplace mechanism then
//! gives epsilon-local-DP for each released vector.
//!
//! The module also carries the machinery to *check* that claim empirically:
//! a pairwise sensitivity audit with constructed worst-case pairs, the legacy
//! min-max normalization whose sensitivity grows with the dimension (the
//! error this design corrects), and a binned statistical test of the DP
//! ratio bound.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float math comes from libm in no_std builds
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Matrix;

/// Privacy budget and representation dimension.
///
/// The Laplace scale is always derived as `2/epsilon`, never stored, so it
/// cannot drift out of sync with the budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    epsilon: f64,
    rep_dim: usize,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, rep_dim: usize) -> Result<PrivacyParams> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Param(format!("epsilon must be positive and finite, got {epsilon}")));
        }
        if rep_dim == 0 {
            return Err(Error::Param("representation dimension must be positive".into()));
        }
        Ok(PrivacyParams { epsilon, rep_dim })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rep_dim(&self) -> usize {
        self.rep_dim
    }

    /// Laplace scale `2/epsilon`, calibrated to the sensitivity bound 2 of
    /// the L1-normalized encoder.
    pub fn noise_scale(&self) -> f64 {
        2.0 / self.epsilon
    }
}

/// Scales `v` to unit L1 norm.
///
/// A zero (or non-finite) norm is a degenerate input: adding noise to an
/// unnormalized vector would silently void the premise that outputs lie on
/// the L1 unit sphere, so the error is surfaced instead.
pub fn l1_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "L1 norm must be positive and finite, got {norm}"
        )));
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Row-wise [`l1_normalize`] over a batch.
pub fn l1_normalize_rows(batch: &Matrix) -> Result<Matrix> {
    let mut out = batch.clone();
    for i in 0..batch.rows() {
        let row = l1_normalize(batch.row(i))?;
        out.row_mut(i).copy_from_slice(&row);
    }
    Ok(out)
}

/// Gradient of `v -> v/||v||_1` applied to an upstream gradient.
///
/// With `s = ||v||_1`: `d/dv_j = g_j/s - sign(v_j) * <g, v> / s^2`.
/// The subgradient at `v_j == 0` is taken as 0.
pub fn l1_normalize_backward(v: &[f64], upstream: &[f64]) -> Vec<f64> {
    assert_eq!(v.len(), upstream.len());
    let s: f64 = v.iter().map(|x| x.abs()).sum();
    let dot: f64 = upstream.iter().zip(v).map(|(g, x)| g * x).sum();
    v.iter()
        .zip(upstream)
        .map(|(x, g)| g / s - x.signum() * dot / (s * s))
        .collect()
}

/// Row-wise [`l1_normalize_backward`].
pub fn l1_normalize_backward_rows(batch: &Matrix, upstream: &Matrix) -> Matrix {
    assert_eq!(batch.rows(), upstream.rows());
    assert_eq!(batch.cols(), upstream.cols());
    let mut out = Matrix::zeros(batch.rows(), batch.cols());
    for i in 0..batch.rows() {
        let g = l1_normalize_backward(batch.row(i), upstream.row(i));
        out.row_mut(i).copy_from_slice(&g);
    }
    out
}

/// Inverse CDF of the centered Laplace distribution with scale `b`,
/// evaluated at `u` in (0, 1). `F^{-1}(1/2) = 0`.
pub fn laplace_inverse_cdf(u: f64, scale: f64) -> f64 {
    let centered = u - 0.5;
    -scale * centered.signum() * (1.0 - 2.0 * centered.abs()).ln()
}

fn laplace_draw<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    // gen::<f64>() yields [0, 1); reject 0 so the inverse CDF stays finite.
    let mut u = rng.gen::<f64>();
    while u == 0.0 {
        u = rng.gen::<f64>();
    }
    laplace_inverse_cdf(u, scale)
}

/// `dim` i.i.d. centered Laplace draws at `scale`, via the inverse CDF, so
/// the sampler can be checked against the closed-form distribution.
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, dim: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Param(format!("Laplace scale must be positive and finite, got {scale}")));
    }
    Ok((0..dim).map(|_| laplace_draw(scale, rng)).collect())
}

/// Releases `v` as an epsilon-DP representation: L1-normalize, then add
/// fresh per-dimension Laplace noise at scale `2/epsilon`. Fresh noise is
/// drawn on every call — the guarantee attaches to each released vector.
pub fn privatize<R: Rng + ?Sized>(v: &[f64], p: &PrivacyParams, rng: &mut R) -> Result<Vec<f64>> {
    if v.len() != p.rep_dim {
        return Err(Error::Shape(format!(
            "vector has {} dimensions, privacy parameters declare {}",
            v.len(),
            p.rep_dim
        )));
    }
    let mut out = l1_normalize(v)?;
    let noise = sample_laplace(p.noise_scale(), out.len(), rng)?;
    for (o, n) in out.iter_mut().zip(noise) {
        *o += n;
    }
    Ok(out)
}

/// Row-wise [`privatize`] over a batch; independent noise per row.
pub fn privatize_rows<R: Rng + ?Sized>(
    batch: &Matrix,
    p: &PrivacyParams,
    rng: &mut R,
) -> Result<Matrix> {
    let mut out = Matrix::zeros(batch.rows(), batch.cols());
    for i in 0..batch.rows() {
        let row = privatize(batch.row(i), p, rng)?;
        out.row_mut(i).copy_from_slice(&row);
    }
    Ok(out)
}

/// Min-max normalization used by the prior work this design corrects:
/// `(v - min) / (max - min)` bounds each *entry* in [0, 1] but leaves the
/// L1 sensitivity as large as the dimension. Kept only so the audits and
/// ratio test can demonstrate the error; never used in the pipeline.
pub fn minmax_normalize_legacy(v: &[f64]) -> Result<Vec<f64>> {
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(Error::DegenerateInput(format!(
            "min-max normalization needs max > min, got min {min}, max {max}"
        )));
    }
    Ok(v.iter().map(|x| (x - min) / (max - min)).collect())
}

/// Which deterministic normalizer feeds the Laplace mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalizer {
    /// Unit L1 sphere; sensitivity bound 2; noise scale `2/epsilon`.
    L1,
    /// Legacy per-entry `[0,1]` bound; true sensitivity `D`; paired with the
    /// prior work's (mis-calibrated) noise scale `1/epsilon`.
    MinMax,
}

impl Normalizer {
    pub fn normalize(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            Normalizer::L1 => l1_normalize(v),
            Normalizer::MinMax => minmax_normalize_legacy(v),
        }
    }

    /// Theoretical L1 sensitivity of the normalized representation.
    pub fn sensitivity_bound(&self, dim: usize) -> f64 {
        match self {
            Normalizer::L1 => 2.0,
            Normalizer::MinMax => dim as f64,
        }
    }

    /// Noise scale each variant pairs with a budget `epsilon`: the corrected
    /// mechanism calibrates to sensitivity 2, the legacy one claimed
    /// sensitivity 1.
    pub fn noise_scale(&self, epsilon: f64) -> f64 {
        match self {
            Normalizer::L1 => 2.0 / epsilon,
            Normalizer::MinMax => 1.0 / epsilon,
        }
    }

    /// A worst-case input pair for this normalizer: the L1 pair attains the
    /// bound 2 exactly; the min-max pair `[0,1,..,1]` vs `[1,0,..,0]` is
    /// fixed by its own normalization and attains distance `D`.
    pub fn adversarial_pair(&self, dim: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            Normalizer::L1 => {
                let mut a = vec![0.0; dim];
                let mut b = vec![0.0; dim];
                a[0] = 1.0;
                b[0] = -1.0;
                (a, b)
            }
            Normalizer::MinMax => {
                let mut a = vec![1.0; dim];
                let mut b = vec![0.0; dim];
                a[0] = 0.0;
                b[0] = 1.0;
                (a, b)
            }
        }
    }
}

/// Outcome of an empirical sensitivity audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// Largest observed pairwise L1 distance after normalization.
    pub max_l1_distance: f64,
    /// Number of pairs evaluated.
    pub pair_count: usize,
    /// Theoretical sensitivity of the normalizer at this dimension.
    pub bound: f64,
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Measures the empirical L1 sensitivity of a normalizer over all pairs of
/// `inputs`, optionally including the constructed worst-case pair.
pub fn sensitivity_audit(
    normalizer: Normalizer,
    inputs: &[Vec<f64>],
    include_adversarial_pair: bool,
) -> Result<SensitivityReport> {
    if inputs.len() < 2 {
        return Err(Error::Usage(format!(
            "sensitivity audit needs at least 2 inputs, got {}",
            inputs.len()
        )));
    }
    let dim = inputs[0].len();
    if inputs.iter().any(|v| v.len() != dim) {
        return Err(Error::Shape("audit inputs must share one dimension".into()));
    }
    let normalized: Vec<Vec<f64>> =
        inputs.iter().map(|v| normalizer.normalize(v)).collect::<Result<_>>()?;
    let mut max = 0.0f64;
    let mut pairs = 0usize;
    for i in 0..normalized.len() {
        for j in (i + 1)..normalized.len() {
            max = max.max(l1_distance(&normalized[i], &normalized[j]));
            pairs += 1;
        }
    }
    if include_adversarial_pair {
        let (a, b) = normalizer.adversarial_pair(dim);
        max = max.max(l1_distance(&normalizer.normalize(&a)?, &normalizer.normalize(&b)?));
        pairs += 1;
    }
    Ok(SensitivityReport { max_l1_distance: max, pair_count: pairs, bound: normalizer.sensitivity_bound(dim) })
}

/// Outcome of the statistical DP ratio test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTestReport {
    /// Largest `|log p_a(bin) - log p_b(bin)|` over all bins.
    pub max_abs_log_ratio: f64,
    /// Estimation allowance from per-bin Wilson intervals at overall 99%
    /// confidence, union-bounded over bins.
    pub slack: f64,
    /// Whether `max_abs_log_ratio <= epsilon + slack`.
    pub pass: bool,
    /// Number of product bins.
    pub bins: usize,
    /// Samples drawn per input.
    pub samples_per_input: usize,
}

/// Two-sided Wilson score interval for `k` successes in `n` trials at normal
/// quantile `z`.
fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Inverse standard normal CDF (Acklam's rational approximation,
/// |error| < 1.2e-9 over (0, 1)).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile must be in (0, 1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Flat bin index for one output vector under shared per-dimension edges.
/// Each dimension contributes `edges.len() + 1` cells, the outer two
/// unbounded, so every output lands in exactly one bin.
fn bin_index(out: &[f64], edges: &[f64]) -> usize {
    let base = edges.len() + 1;
    let mut idx = 0usize;
    for &v in out {
        let d = edges.partition_point(|&e| e <= v);
        idx = idx * base + d;
    }
    idx
}

/// Statistical check of the local-DP ratio bound at coarse resolution.
///
/// Draws `n_samples` mechanism outputs under each input, histograms them on
/// the product bins induced by `bin_edges` (shared across dimensions, with
/// unbounded outer cells), and verifies that no bin's empirical log
/// probability ratio exceeds `epsilon` by more than the estimation slack.
/// A bin left empty under either input is reported as an error rather than
/// silently skipped.
pub fn dp_ratio_test<R: Rng + ?Sized>(
    normalizer: Normalizer,
    epsilon: f64,
    input_a: &[f64],
    input_b: &[f64],
    bin_edges: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<RatioTestReport> {
    if !(epsilon > 0.0) {
        return Err(Error::Param(format!("epsilon must be positive, got {epsilon}")));
    }
    if input_a.len() != input_b.len() || input_a.is_empty() {
        return Err(Error::Shape("inputs must be non-empty and share one dimension".into()));
    }
    if bin_edges.is_empty() || bin_edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage("bin edges must be non-empty and strictly increasing".into()));
    }
    if n_samples == 0 {
        return Err(Error::Param("n_samples must be positive".into()));
    }
    let dim = input_a.len();
    let base = bin_edges.len() + 1;
    let bins = base.checked_pow(dim as u32).filter(|&b| b <= 1 << 20).ok_or_else(|| {
        Error::Param(format!("{base}^{dim} bins is too fine for a statistical test"))
    })?;

    let scale = normalizer.noise_scale(epsilon);
    let centers = [normalizer.normalize(input_a)?, normalizer.normalize(input_b)?];
    let mut counts = [vec![0u64; bins], vec![0u64; bins]];
    let mut output = vec![0.0; dim];
    for (center, count) in centers.iter().zip(counts.iter_mut()) {
        for _ in 0..n_samples {
            for (o, c) in output.iter_mut().zip(center) {
                *o = c + laplace_draw(scale, rng);
            }
            count[bin_index(&output, bin_edges)] += 1;
        }
    }

    let empty = (0..bins).filter(|&i| counts[0][i] == 0 || counts[1][i] == 0).count();
    if empty > 0 {
        return Err(Error::EmptyBins { empty, total: bins });
    }

    // Union bound over bins and the two per-bin intervals.
    let alpha = 0.01 / (2.0 * bins as f64);
    let z = inverse_normal_cdf(1.0 - alpha / 2.0);
    let n = n_samples as f64;
    let mut max_abs_log_ratio = 0.0f64;
    let mut slack = 0.0f64;
    for i in 0..bins {
        let (ka, kb) = (counts[0][i], counts[1][i]);
        let (pa, pb) = (ka as f64 / n, kb as f64 / n);
        max_abs_log_ratio = max_abs_log_ratio.max((pa.ln() - pb.ln()).abs());
        let mut dev = 0.0;
        for k in [ka, kb] {
            let p = k as f64 / n;
            let (lo, hi) = wilson_interval(k, n_samples as u64, z);
            dev += (p / lo).ln().max((hi / p).ln());
        }
        slack = slack.max(dev);
    }
    Ok(RatioTestReport {
        max_abs_log_ratio,
        slack,
        pass: max_abs_log_ratio <= epsilon + slack,
        bins,
        samples_per_input: n_samples,
    })
}
