//! Adam with bias correction, one state per layer stack.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float math comes from libm in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::nn::{LayerStack, StackGrads};

#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Denominator fuzz; distinct from any privacy epsilon.
    pub eps_num: f64,
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> AdamParams {
        AdamParams { lr, ..AdamParams::default() }
    }
}

impl Default for AdamParams {
    fn default() -> AdamParams {
        AdamParams { lr: 0.001, beta1: 0.9, beta2: 0.999, eps_num: 1e-8 }
    }
}

/// First/second moment estimates shaped like one stack's parameters, plus
/// the step counter used for bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    hyper: AdamParams,
    step_count: u64,
    m_weight: Vec<Matrix>,
    v_weight: Vec<Matrix>,
    m_bias: Vec<Vec<f64>>,
    v_bias: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(stack: &LayerStack, hyper: AdamParams) -> AdamState {
        let m_weight: Vec<Matrix> =
            stack.layers().iter().map(|l| Matrix::zeros(l.out_dim(), l.in_dim())).collect();
        let m_bias: Vec<Vec<f64>> =
            stack.layers().iter().map(|l| vec![0.0; l.out_dim()]).collect();
        AdamState {
            hyper,
            step_count: 0,
            v_weight: m_weight.clone(),
            v_bias: m_bias.clone(),
            m_weight,
            m_bias,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// One bias-corrected Adam update of `stack` in place. Increments the
    /// step counter by exactly one.
    pub fn apply(&mut self, stack: &mut LayerStack, grads: &StackGrads) -> Result<()> {
        if grads.layers.len() != self.m_weight.len() || grads.layers.len() != stack.layers().len() {
            return Err(Error::Shape(format!(
                "gradient for {} layers applied to state/stack with {}/{}",
                grads.layers.len(),
                self.m_weight.len(),
                stack.layers().len()
            )));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let AdamParams { lr, beta1, beta2, eps_num } = self.hyper;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for (idx, layer) in stack.layers_mut().iter_mut().enumerate() {
            let lg = &grads.layers[idx];
            if lg.weight.rows() != layer.weight.rows()
                || lg.weight.cols() != layer.weight.cols()
                || lg.bias.len() != layer.bias.len()
            {
                return Err(Error::Shape(format!("gradient shape mismatch at layer {idx}")));
            }
            let (m, v) = (&mut self.m_weight[idx], &mut self.v_weight[idx]);
            for (((p, g), m), v) in layer
                .weight
                .as_mut_slice()
                .iter_mut()
                .zip(lg.weight.as_slice())
                .zip(m.as_mut_slice())
                .zip(v.as_mut_slice())
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps_num);
            }
            let (mb, vb) = (&mut self.m_bias[idx], &mut self.v_bias[idx]);
            for (((p, g), m), v) in
                layer.bias.iter_mut().zip(&lg.bias).zip(mb.iter_mut()).zip(vb.iter_mut())
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps_num);
            }
        }
        Ok(())
    }
}
