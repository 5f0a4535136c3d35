//! Cross-entropy over logits.

use alloc::format;

#[allow(unused_imports)] // float math comes from libm in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::mat::Matrix;

/// Mean negative log-softmax of the true class.
///
/// Returns the scalar loss and its gradient w.r.t. the logits,
/// `(softmax - onehot) / n`. Log-sum-exp is max-shifted for stability.
pub fn cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (n, k) = (logits.rows(), logits.cols());
    if n == 0 {
        return Err(Error::Usage("cross_entropy needs at least one row".into()));
    }
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "{} labels for {} logit rows",
            labels.len(),
            n
        )));
    }
    let mut grad = Matrix::zeros(n, k);
    let mut loss = 0.0;
    for i in 0..n {
        let label = labels[i];
        if label >= k {
            return Err(Error::LabelOutOfRange { label, classes: k });
        }
        let row = logits.row(i);
        let max = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut sum = 0.0;
        for &v in row {
            sum += (v - max).exp();
        }
        let lse = max + sum.ln();
        loss += lse - row[label];
        let g = grad.row_mut(i);
        for (j, &v) in row.iter().enumerate() {
            g[j] = (v - lse).exp() / n as f64;
        }
        g[label] -= 1.0 / n as f64;
    }
    Ok((loss / n as f64, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn uniform_two_class_loss_is_ln_2() {
        let (loss, grad) = cross_entropy(&Matrix::from_rows(&[vec![0.0, 0.0]]), &[0]).unwrap();
        assert!((loss - core::f64::consts::LN_2).abs() < 1e-12);
        // softmax = [0.5, 0.5]; grad = [0.5-1, 0.5] / 1
        assert!((grad[(0, 0)] + 0.5).abs() < 1e-12);
        assert!((grad[(0, 1)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn saturated_correct_class_has_near_zero_loss() {
        let (loss, _) = cross_entropy(&Matrix::from_rows(&[vec![100.0, 0.0]]), &[0]).unwrap();
        assert!(loss.abs() < 1e-9);
    }

    #[test]
    fn batch_loss_is_mean_of_per_row_losses() {
        let rows = [vec![0.3, -1.2, 0.8], vec![2.0, 0.1, -0.4]];
        let labels = [2usize, 0usize];
        let (batch_loss, _) =
            cross_entropy(&Matrix::from_rows(&rows), &labels).unwrap();
        let mut mean = 0.0;
        for (row, &label) in rows.iter().zip(&labels) {
            let (l, _) = cross_entropy(&Matrix::from_rows(std::slice::from_ref(row)), &[label]).unwrap();
            mean += l;
        }
        mean /= 2.0;
        assert!((batch_loss - mean).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        let err = cross_entropy(&Matrix::from_rows(&[vec![0.0, 0.0]]), &[2]).unwrap_err();
        assert_eq!(err, Error::LabelOutOfRange { label: 2, classes: 2 });
    }
}
