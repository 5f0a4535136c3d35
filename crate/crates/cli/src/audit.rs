//! The `audit` subcommand: empirical sensitivity checks for both
//! normalizers and the statistical DP ratio test, demonstrating that the
//! corrected mechanism honors its budget while the legacy min-max pairing
//! does not.

use anyhow::Result;
use federate_core::privacy::{
    dp_ratio_test, sensitivity_audit, Normalizer, RatioTestReport, SensitivityReport,
};
use federate_core::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityLine {
    pub normalizer: Normalizer,
    pub dim: usize,
    pub report: SensitivityReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioLine {
    pub normalizer: Normalizer,
    pub epsilon: f64,
    pub dim: usize,
    pub report: RatioTestReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub sensitivity: Vec<SensitivityLine>,
    pub ratio: Vec<RatioLine>,
}

/// Random audit inputs plus the constructed worst-case pair per normalizer.
fn audit_inputs(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed, 600);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

/// Runs the full audit: pairwise sensitivity over random inputs with the
/// adversarial pair included, at dimensions 4, 64, and 300, plus the ratio
/// test at epsilon = 1 on each normalizer's worst-case pair in dimension 4.
pub fn run_audit(samples: usize, seed: u64) -> Result<AuditReport> {
    let mut sensitivity = Vec::new();
    for normalizer in [Normalizer::L1, Normalizer::MinMax] {
        for dim in [4usize, 64, 300] {
            let inputs = audit_inputs(dim, 60, seed + dim as u64);
            let report = sensitivity_audit(normalizer, &inputs, true)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            sensitivity.push(SensitivityLine { normalizer, dim, report });
        }
    }

    let epsilon = 1.0;
    let dim = 4usize;
    let mut ratio = Vec::new();
    for normalizer in [Normalizer::L1, Normalizer::MinMax] {
        let (a, b) = normalizer.adversarial_pair(dim);
        let edges = [-0.5, 0.5];
        let mut rng = rng::stream(seed, 601);
        let report = dp_ratio_test(normalizer, epsilon, &a, &b, &edges, samples, &mut rng)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        ratio.push(RatioLine { normalizer, epsilon, dim, report });
    }
    Ok(AuditReport { sensitivity, ratio })
}

pub fn render_text(report: &AuditReport) -> String {
    let mut out = String::new();
    out.push_str("sensitivity audits (max observed L1 distance vs bound):\n");
    for line in &report.sensitivity {
        out.push_str(&format!(
            "  {:?} d={:>3}: attained {:>10.6} of bound {:>7.2} over {} pairs\n",
            line.normalizer,
            line.dim,
            line.report.max_l1_distance,
            line.report.bound,
            line.report.pair_count
        ));
    }
    out.push_str("ratio tests (worst-case pair, epsilon = 1):\n");
    for line in &report.ratio {
        out.push_str(&format!(
            "  {:?} d={}: max |log ratio| {:.4}, slack {:.4} -> {}\n",
            line.normalizer,
            line.dim,
            line.report.max_abs_log_ratio,
            line.report.slack,
            if line.report.pass { "PASS" } else { "FAIL" }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn audit_separates_the_two_normalizers() {
        let report = run_audit(150_000, 1).unwrap();
        for line in &report.sensitivity {
            assert!(line.report.max_l1_distance <= line.report.bound + 1e-9);
            match line.normalizer {
                Normalizer::L1 => assert!(line.report.max_l1_distance >= 1.99),
                Normalizer::MinMax => {
                    assert!(line.report.max_l1_distance >= 0.99 * line.dim as f64)
                }
            }
        }
        let l1 = report.ratio.iter().find(|l| l.normalizer == Normalizer::L1).unwrap();
        let minmax = report.ratio.iter().find(|l| l.normalizer == Normalizer::MinMax).unwrap();
        assert!(l1.report.pass, "{:?}", l1.report);
        assert!(!minmax.report.pass, "{:?}", minmax.report);
        let text = render_text(&report);
        assert!(text.contains("PASS") && text.contains("FAIL"));
    }
}
