//! Error type shared by all modules of the core crate.

use alloc::string::String;
use core::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Failures surfaced by the core pipeline.
///
/// Numerical code distinguishes inputs that are structurally wrong (shapes,
/// parameters, API misuse) from inputs that are degenerate for the operation
/// at hand (zero vectors, constant vectors, empty groups), because the latter
/// usually point at an upstream modelling problem rather than a caller bug.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Matrix/vector dimensions do not line up.
    Shape(String),
    /// An input is valid in shape but degenerate for the operation
    /// (zero L1 norm, constant vector, ...).
    DegenerateInput(String),
    /// A scalar parameter is out of its allowed range.
    Param(String),
    /// The API was called in an unsupported way (empty input list,
    /// tape/stack mismatch, ...).
    Usage(String),
    /// A class label lies outside `[0, classes)`.
    LabelOutOfRange { label: usize, classes: usize },
    /// A sensitive group has no positive-label instance, so its true
    /// positive rate (and hence the gap) is undefined.
    UndefinedGap { group: usize },
    /// Training produced a non-finite loss; carries the epoch and batch at
    /// which divergence was detected.
    Diverged { epoch: usize, batch: usize },
    /// The ratio test observed bins with zero hits under one of the inputs;
    /// callers should widen the bins or raise the sample count.
    EmptyBins { empty: usize, total: usize },
    /// Dataset ingestion failed (missing column, bad row, unknown category).
    Ingestion(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::DegenerateInput(msg) => write!(f, "degenerate input: {msg}"),
            Error::Param(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::LabelOutOfRange { label, classes } => {
                write!(f, "label {label} out of range for {classes} classes")
            }
            Error::UndefinedGap { group } => {
                write!(f, "TPR undefined: group {group} has no positive-label instance")
            }
            Error::Diverged { epoch, batch } => {
                write!(f, "training diverged (non-finite loss) at epoch {epoch}, batch {batch}")
            }
            Error::EmptyBins { empty, total } => {
                write!(
                    f,
                    "{empty} of {total} bins received no samples under at least one input; \
                     widen the bins or increase the sample count"
                )
            }
            Error::Ingestion(msg) => write!(f, "ingestion error: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
