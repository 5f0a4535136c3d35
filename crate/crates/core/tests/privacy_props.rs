//! Distributional and sensitivity properties of the privacy layer, checked
//! against closed forms: the Laplace CDF, analytic per-bin masses for the
//! ratio test, and the triangle-inequality sensitivity bound.

use federate_core::privacy::{
    dp_ratio_test, l1_normalize, sample_laplace, sensitivity_audit, Normalizer,
};
use federate_core::rng;
use proptest::prelude::*;
use rand::Rng;

/// Closed-form CDF of the centered Laplace distribution (test oracle,
/// independent of the sampler's inverse-CDF path).
fn laplace_cdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

/// Mass of each 1-D cell induced by `edges` (outer cells unbounded) for a
/// Laplace centered at `mu`.
fn cell_masses(mu: f64, scale: f64, edges: &[f64]) -> Vec<f64> {
    let mut masses = Vec::with_capacity(edges.len() + 1);
    let mut prev = 0.0;
    for &e in edges {
        let f = laplace_cdf(e - mu, scale);
        masses.push(f - prev);
        prev = f;
    }
    masses.push(1.0 - prev);
    masses
}

/// True max |log p_a(bin) - log p_b(bin)| over the product bins: the log
/// ratio of a product cell is the sum of per-dimension log ratios, so the
/// extremes separate across dimensions.
fn analytic_max_log_ratio(
    centers_a: &[f64],
    centers_b: &[f64],
    scale: f64,
    edges: &[f64],
) -> f64 {
    let mut hi = 0.0;
    let mut lo = 0.0;
    for (&ma, &mb) in centers_a.iter().zip(centers_b) {
        let a = cell_masses(ma, scale, edges);
        let b = cell_masses(mb, scale, edges);
        let deltas: Vec<f64> =
            a.iter().zip(&b).map(|(x, y)| x.ln() - y.ln()).collect();
        hi += deltas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        lo += deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    }
    hi.abs().max(lo.abs())
}

#[test]
fn laplace_moments_at_scale_quarter() {
    let mut rng = rng::stream(404, 1);
    let draws = sample_laplace(0.25, 1_000_000, &mut rng).unwrap();
    let mean: f64 = draws.iter().sum::<f64>() / draws.len() as f64;
    let mean_abs: f64 = draws.iter().map(|x| x.abs()).sum::<f64>() / draws.len() as f64;
    assert!(mean.abs() <= 0.002, "sample mean {mean}");
    // E|X| = scale for a centered Laplace.
    assert!((mean_abs - 0.25).abs() <= 0.02 * 0.25, "mean |x| {mean_abs}");
}

#[test]
fn laplace_sampler_passes_ks_against_closed_form_cdf() {
    let n = 100_000usize;
    let mut rng = rng::stream(405, 1);
    let mut draws = sample_laplace(1.7, n, &mut rng).unwrap();
    draws.sort_by(f64::total_cmp);
    let mut d = 0.0f64;
    for (i, &x) in draws.iter().enumerate() {
        let f = laplace_cdf(x, 1.7);
        d = d.max(((i + 1) as f64 / n as f64 - f).abs());
        d = d.max((f - i as f64 / n as f64).abs());
    }
    // Asymptotic Kolmogorov-Smirnov critical value at significance 0.01.
    let threshold = 1.62762 / (n as f64).sqrt();
    assert!(d <= threshold, "KS statistic {d} exceeds {threshold}");
}

#[test]
fn normalized_pairs_stay_within_sensitivity_two() {
    // 10^4+ random pairs across dimensions 2..=300, mixed scales and signs.
    let mut rng = rng::stream(406, 1);
    let mut pairs = 0usize;
    while pairs < 10_500 {
        let dim = rng.gen_range(2..=300);
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            (0..dim).map(|_| rng.gen_range(-1.0..1.0) * scale).collect()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let (Ok(na), Ok(nb)) = (l1_normalize(&a), l1_normalize(&b)) else {
            continue;
        };
        let dist: f64 = na.iter().zip(&nb).map(|(x, y)| (x - y).abs()).sum();
        assert!(dist <= 2.0 + 1e-9, "distance {dist} at dim {dim}");
        pairs += 1;
    }
}

#[test]
fn audits_attain_their_bounds() {
    for dim in [2usize, 4, 64, 300] {
        let report = sensitivity_audit(Normalizer::L1, &[vec![0.5; dim], vec![-0.5; dim]], true)
            .unwrap();
        assert!(report.max_l1_distance >= 1.999, "l1 dim {dim}: {}", report.max_l1_distance);
        assert!(report.max_l1_distance <= report.bound + 1e-9);
    }
    for dim in [4usize, 64, 300] {
        let inputs = [vec![0.3; dim], vec![0.7; dim]];
        // Constant vectors are degenerate for min-max; rely on the
        // constructed pair.
        let report = sensitivity_audit(
            Normalizer::MinMax,
            &[inputs[0].clone().into_iter().enumerate().map(|(i, v)| v + i as f64 * 0.01).collect(), inputs[1].clone().into_iter().enumerate().map(|(i, v)| v - i as f64 * 0.01).collect()],
            true,
        )
        .unwrap();
        assert!(
            report.max_l1_distance >= 0.99 * dim as f64,
            "minmax dim {dim}: {}",
            report.max_l1_distance
        );
        assert!(report.max_l1_distance <= report.bound + 1e-9);
    }
}

#[test]
fn ratio_test_corrected_mechanism_matches_analytic_bound() {
    // 1-D worst case: inputs normalize to +1 and -1, epsilon = 1, noise
    // scale 2. The unbounded tail cells attain the ratio e^epsilon exactly,
    // so the analytic max equals epsilon.
    let edges = [-1.0, 0.0, 1.0];
    let analytic = analytic_max_log_ratio(&[1.0], &[-1.0], 2.0, &edges);
    assert!(analytic <= 1.0 + 1e-12, "analytic {analytic}");
    assert!(analytic >= 0.99, "tail cells should be near the bound, got {analytic}");

    let mut rng = rng::stream(407, 1);
    let report =
        dp_ratio_test(Normalizer::L1, 1.0, &[3.0], &[-3.0], &edges, 400_000, &mut rng).unwrap();
    assert!(report.pass, "{report:?}");
    assert!(
        (report.max_abs_log_ratio - analytic).abs() <= report.slack,
        "empirical {} vs analytic {analytic} (slack {})",
        report.max_abs_log_ratio,
        report.slack
    );
}

#[test]
fn ratio_test_legacy_minmax_fails_at_dimension_four() {
    // The legacy scale 1/epsilon with the min-max normalizer: the worst-case
    // pair differs by 1 in every coordinate, so the true ratio reaches
    // 4 * epsilon and the test must fail.
    let edges = [-0.5, 0.5];
    let a = [0.0, 1.0, 1.0, 1.0];
    let b = [1.0, 0.0, 0.0, 0.0];
    let analytic = analytic_max_log_ratio(&a, &b, 1.0, &edges);
    assert!(analytic > 3.5, "analytic {analytic}");

    let mut rng = rng::stream(408, 1);
    let report =
        dp_ratio_test(Normalizer::MinMax, 1.0, &a, &b, &edges, 400_000, &mut rng).unwrap();
    assert!(!report.pass, "{report:?}");
    assert!(
        (report.max_abs_log_ratio - analytic).abs() <= report.slack + 0.05,
        "empirical {} vs analytic {analytic}",
        report.max_abs_log_ratio
    );
}

#[test]
fn fresh_noise_on_every_call() {
    let mut rng = rng::stream(409, 1);
    let p = federate_core::privacy::PrivacyParams::new(10.0, 8).unwrap();
    let a = federate_core::privacy::privatize(&[1.0; 8], &p, &mut rng).unwrap();
    let b = federate_core::privacy::privatize(&[1.0; 8], &p, &mut rng).unwrap();
    assert_ne!(a, b);
}

proptest! {
    #[test]
    fn l1_normalization_lands_on_the_unit_sphere(
        v in proptest::collection::vec(-1e6f64..1e6, 1..50)
    ) {
        prop_assume!(v.iter().map(|x| x.abs()).sum::<f64>() > 1e-9);
        let n = l1_normalize(&v).unwrap();
        let norm: f64 = n.iter().map(|x| x.abs()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        // Parallel to the input: components keep their signs and ratios.
        for (a, b) in v.iter().zip(&n) {
            prop_assert!(a.signum() * b.signum() >= 0.0);
        }
    }

    #[test]
    fn normalized_distance_never_exceeds_two(
        a in proptest::collection::vec(-100f64..100.0, 2..40),
        b in proptest::collection::vec(-100f64..100.0, 2..40),
    ) {
        let dim = a.len().min(b.len());
        let (a, b) = (&a[..dim], &b[..dim]);
        prop_assume!(a.iter().map(|x| x.abs()).sum::<f64>() > 1e-9);
        prop_assume!(b.iter().map(|x| x.abs()).sum::<f64>() > 1e-9);
        let na = l1_normalize(a).unwrap();
        let nb = l1_normalize(b).unwrap();
        let dist: f64 = na.iter().zip(&nb).map(|(x, y)| (x - y).abs()).sum();
        prop_assert!(dist <= 2.0 + 1e-9);
    }
}
