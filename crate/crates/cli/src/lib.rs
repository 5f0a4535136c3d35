//! IO companion to `federate-core`: experiment configuration, the Adult
//! Income ingestion pipeline, dataset/representation file formats, the
//! parallel resumable sweep executor, audits, and report rendering.
//!
//! The `federate` binary in this crate exposes the subcommands
//! `train`, `sweep`, `probe`, `mdl`, `audit`, and `report`.

pub mod adult;
pub mod audit;
pub mod config;
pub mod dataio;
pub mod dataset;
pub mod report;
pub mod sweep;
