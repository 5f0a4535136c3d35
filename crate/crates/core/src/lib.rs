//! Learning differentially private representations that induce fair models.
//!
//! The pipeline trains a feed-forward encoder whose output is L1-normalized
//! and perturbed with per-dimension Laplace noise at scale `2/epsilon`, which
//! makes every released representation epsilon-locally-differentially-private.
//! A task classifier and an adversary that tries to recover the sensitive
//! attribute sit on top of the private representation; the adversary is
//! connected through a gradient reversal layer so the encoder is pushed to
//! hide the attribute while staying useful for the task.
//!
//! The crate is organized around that pipeline:
//!
//! - [`nn`]: minimal differentiable stacks (affine + ReLU + dropout), manual
//!   backprop with tapes, cross-entropy, Adam, and gradient reversal.
//! - [`privacy`]: L1 normalization, the Laplace sampler, sensitivity audits,
//!   the (broken) min-max normalization used by prior work, and a statistical
//!   ratio test of the differential privacy guarantee.
//! - [`data`]: in-memory datasets, stratified splitting, subgroup skewing,
//!   and a synthetic Gaussian-subgroup generator.
//! - [`train`]: the min-max training loop with its lambda schedule and the
//!   baseline mode switches.
//! - [`metrics`]: accuracy, TPR-gap/GRMS fairness, post-hoc leakage probes,
//!   and MDL via online coding.
//! - [`select`]: hyperparameter grids, relaxation-threshold selection, and
//!   multi-seed aggregation.
//!
//! Everything is pure `f64` compute over caller-provided seeded RNGs; IO,
//! file formats, and the CLI live in the companion `federate-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod mat;
pub mod metrics;
pub mod nn;
pub mod privacy;
pub mod rng;
pub mod select;
pub mod train;

pub use error::{Error, Result};
pub use mat::Matrix;
