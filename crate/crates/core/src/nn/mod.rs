//! Minimal differentiable stacks: affine layers with ReLU/identity
//! activations and inverted dropout, manual backprop over a recorded tape,
//! cross-entropy, Adam, and the gradient reversal pseudo-layer.
//!
//! The model family is fixed (stacks of affine + activation + dropout), so a
//! taped implementation stays small and every gradient can be checked
//! against central finite differences. All math is `f64`.

mod adam;
mod loss;

pub use adam::{AdamParams, AdamState};
pub use loss::cross_entropy;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // float math comes from libm in no_std builds
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::mat::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// One dense layer: `y = dropout(activation(W x + b))`.
///
/// Weights are row-major with shape `[out × in]`. Dropout uses inverted
/// scaling (kept units are divided by the keep probability at train time),
/// so evaluation needs no rescaling.
#[derive(Debug, Clone)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub dropout: f64,
}

impl Layer {
    /// Glorot-uniform initialized layer: weights in
    /// `±sqrt(6/(fan_in+fan_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        dropout: f64,
        rng: &mut R,
    ) -> Layer {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weight = Matrix::from_fn(out_dim, in_dim, |_, _| rng.gen_range(-limit..limit));
        Layer { weight, bias: vec![0.0; out_dim], activation, dropout }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// An ordered stack of dense layers with chained dimensions.
#[derive(Debug, Clone)]
pub struct LayerStack {
    layers: Vec<Layer>,
}

/// Per-layer gradients with the same shapes as the stack's parameters.
#[derive(Debug, Clone)]
pub struct StackGrads {
    pub layers: Vec<LayerGrads>,
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl StackGrads {
    pub fn zeros_like(stack: &LayerStack) -> StackGrads {
        StackGrads {
            layers: stack
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weight: Matrix::zeros(l.out_dim(), l.in_dim()),
                    bias: vec![0.0; l.out_dim()],
                })
                .collect(),
        }
    }

    /// `self += s * other`, layer by layer.
    pub fn add_scaled(&mut self, other: &StackGrads, s: f64) {
        assert_eq!(self.layers.len(), other.layers.len());
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.add_scaled(&b.weight, s);
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += s * *y;
            }
        }
    }
}

/// Activations cached by a training-mode forward pass, consumed by
/// [`LayerStack::backward`].
#[derive(Debug)]
pub struct Tape {
    layers: Vec<TapeLayer>,
    batch_rows: usize,
}

#[derive(Debug)]
struct TapeLayer {
    input: Matrix,
    pre_activation: Matrix,
    /// `0.0` for dropped units, `1/keep` for kept ones; `None` when the
    /// layer has no dropout.
    dropout_scale: Option<Matrix>,
}

impl LayerStack {
    /// Validates layer dimension chaining and dropout rates.
    pub fn new(layers: Vec<Layer>) -> Result<LayerStack> {
        if layers.is_empty() {
            return Err(Error::Usage("a layer stack needs at least one layer".into()));
        }
        for layer in &layers {
            if !(0.0..1.0).contains(&layer.dropout) {
                return Err(Error::Param(format!(
                    "dropout rate {} not in [0, 1)",
                    layer.dropout
                )));
            }
            if layer.bias.len() != layer.out_dim() {
                return Err(Error::Shape(format!(
                    "bias length {} != layer output dim {}",
                    layer.bias.len(),
                    layer.out_dim()
                )));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Shape(format!(
                    "layer output dim {} does not chain into next input dim {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        Ok(LayerStack { layers })
    }

    /// Glorot-initialized MLP over `dims = [in, hidden.., out]`: hidden
    /// layers get ReLU and `dropout`, the final layer is linear with no
    /// dropout (it produces logits or a representation).
    pub fn mlp<R: Rng + ?Sized>(dims: &[usize], dropout: f64, rng: &mut R) -> Result<LayerStack> {
        if dims.len() < 2 {
            return Err(Error::Usage("need at least input and output dims".into()));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (idx, pair) in dims.windows(2).enumerate() {
            let last = idx == dims.len() - 2;
            let (act, rate) = if last { (Activation::Identity, 0.0) } else { (Activation::Relu, dropout) };
            layers.push(Layer::glorot(pair[0], pair[1], act, rate, rng));
        }
        LayerStack::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    fn check_input(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.in_dim() {
            return Err(Error::Shape(format!(
                "batch has {} columns, stack expects {}",
                batch.cols(),
                self.in_dim()
            )));
        }
        Ok(())
    }

    fn affine(&self, idx: usize, input: &Matrix) -> Matrix {
        let layer = &self.layers[idx];
        let mut z = input.matmul_nt(&layer.weight);
        z.add_row_bias(&layer.bias);
        z
    }

    /// Training-mode forward pass: applies dropout and records a tape for
    /// [`LayerStack::backward`]. Layers with `dropout == 0` draw nothing
    /// from `rng`, so a zero-rate training pass is bit-identical to
    /// evaluation.
    pub fn forward_train<R: Rng + ?Sized>(
        &self,
        batch: &Matrix,
        rng: &mut R,
    ) -> Result<(Matrix, Tape)> {
        self.check_input(batch)?;
        let mut tape = Tape { layers: Vec::with_capacity(self.layers.len()), batch_rows: batch.rows() };
        let mut current = batch.clone();
        for (idx, layer) in self.layers.iter().enumerate() {
            let z = self.affine(idx, &current);
            let mut out = match layer.activation {
                Activation::Relu => z.clone().map(|v| v.max(0.0)),
                Activation::Identity => z.clone(),
            };
            let dropout_scale = if layer.dropout > 0.0 {
                let keep = 1.0 - layer.dropout;
                let scale = Matrix::from_fn(out.rows(), out.cols(), |_, _| {
                    if rng.gen::<f64>() < layer.dropout { 0.0 } else { 1.0 / keep }
                });
                for (o, s) in out.as_mut_slice().iter_mut().zip(scale.as_slice()) {
                    *o *= *s;
                }
                Some(scale)
            } else {
                None
            };
            tape.layers.push(TapeLayer { input: current, pre_activation: z, dropout_scale });
            current = out;
        }
        Ok((current, tape))
    }

    /// Evaluation-mode forward pass: no dropout, no tape, deterministic.
    pub fn forward_eval(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_input(batch)?;
        let mut current = batch.clone();
        for (idx, layer) in self.layers.iter().enumerate() {
            let z = self.affine(idx, &current);
            current = match layer.activation {
                Activation::Relu => z.map(|v| v.max(0.0)),
                Activation::Identity => z,
            };
        }
        Ok(current)
    }

    /// Backpropagates `upstream` (gradient w.r.t. the stack output) through
    /// the tape, returning parameter gradients and the gradient w.r.t. the
    /// stack input.
    pub fn backward(&self, tape: &Tape, upstream: &Matrix) -> Result<(StackGrads, Matrix)> {
        if tape.layers.len() != self.layers.len() {
            return Err(Error::Usage(format!(
                "tape records {} layers but stack has {}",
                tape.layers.len(),
                self.layers.len()
            )));
        }
        if upstream.rows() != tape.batch_rows || upstream.cols() != self.out_dim() {
            return Err(Error::Shape(format!(
                "upstream gradient is {}x{}, expected {}x{}",
                upstream.rows(),
                upstream.cols(),
                tape.batch_rows,
                self.out_dim()
            )));
        }
        let mut grads = StackGrads::zeros_like(self);
        let mut g = upstream.clone();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let rec = &tape.layers[idx];
            if rec.input.cols() != layer.in_dim() || rec.pre_activation.cols() != layer.out_dim() {
                return Err(Error::Usage("tape does not match this stack's shapes".into()));
            }
            if let Some(scale) = &rec.dropout_scale {
                for (gv, sv) in g.as_mut_slice().iter_mut().zip(scale.as_slice()) {
                    *gv *= *sv;
                }
            }
            if layer.activation == Activation::Relu {
                for (gv, zv) in g.as_mut_slice().iter_mut().zip(rec.pre_activation.as_slice()) {
                    if *zv <= 0.0 {
                        *gv = 0.0;
                    }
                }
            }
            grads.layers[idx].weight = g.matmul_tn(&rec.input);
            grads.layers[idx].bias = g.col_sums();
            g = g.matmul(&layer.weight);
        }
        Ok((grads, g))
    }
}

/// Gradient reversal pseudo-layer: identity in the forward pass.
pub fn grad_reverse_forward(x: &Matrix) -> Matrix {
    x.clone()
}

/// Backward pass of gradient reversal: scales the upstream gradient by
/// `-lambda` before it continues toward the encoder. `lambda` must be
/// non-negative.
pub fn grad_reverse_backward(upstream: &Matrix, lambda: f64) -> Matrix {
    assert!(lambda >= 0.0, "gradient reversal lambda must be non-negative");
    let mut g = upstream.clone();
    g.scale(-lambda);
    g
}

/// Encoder, task classifier, and adversary over a shared representation of
/// dimension `rep_dim`.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub encoder: LayerStack,
    pub classifier: LayerStack,
    pub adversary: LayerStack,
    pub rep_dim: usize,
}

impl ModelParams {
    /// Checks that the classifier and adversary both consume the encoder's
    /// output dimension.
    pub fn new(encoder: LayerStack, classifier: LayerStack, adversary: LayerStack) -> Result<ModelParams> {
        let rep_dim = encoder.out_dim();
        if classifier.in_dim() != rep_dim || adversary.in_dim() != rep_dim {
            return Err(Error::Shape(format!(
                "classifier input {} and adversary input {} must equal representation dim {}",
                classifier.in_dim(),
                adversary.in_dim(),
                rep_dim
            )));
        }
        Ok(ModelParams { encoder, classifier, adversary, rep_dim })
    }
}
