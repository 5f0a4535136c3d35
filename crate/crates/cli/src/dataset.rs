//! Builds the experiment dataset described by a configuration: synthetic
//! generation or the Adult pipeline, splitting, optional skewing, and the
//! optional binary cache.

use anyhow::{Context, Result};
use federate_core::data::{
    make_synthetic, skew_subgroups, split_dataset, Dataset, SkewSpec,
};

use crate::config::{DataSource, ExperimentConfig};
use crate::{adult, dataio};

fn build_fresh(config: &ExperimentConfig) -> Result<Dataset> {
    let mut dataset = match config.dataset {
        DataSource::Synthetic => {
            let d = config.synth.dim;
            let mut mean0 = vec![0.0; d];
            let mut mean1 = vec![0.0; d];
            mean0[0] = -config.synth.class_sep;
            mean1[0] = config.synth.class_sep;
            let mut shift = vec![0.0; d];
            shift[1] = config.synth.group_shift;
            let mut ds = make_synthetic(
                config.synth.n,
                d,
                &[mean0, mean1],
                &shift,
                config.synth.noise_std,
                config.data_seed,
            )
            .map_err(|e| anyhow::anyhow!("{e}"))?;
            split_dataset(&mut ds, config.split, config.data_seed)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            ds
        }
        DataSource::Adult => {
            let path = config.adult_path.as_ref().context("adult_path is required")?;
            let (ds, report, summary) = adult::load_adult(path, config.split, config.data_seed)?;
            eprintln!(
                "adult: kept {} rows, dropped {} with missing values, split {:?}{}",
                report.rows_kept,
                report.rows_dropped_missing,
                summary.counts,
                if summary.stratified { "" } else { " (global fallback)" }
            );
            ds
        }
    };
    if let Some([f11, f01, f10, f00]) = config.skew {
        let spec = SkewSpec::binary(f11, f01, f10, f00).map_err(|e| anyhow::anyhow!("{e}"))?;
        dataset =
            skew_subgroups(&dataset, &spec, config.data_seed).map_err(|e| anyhow::anyhow!("{e}"))?;
    }
    Ok(dataset)
}

/// Builds (or loads) the dataset. With `dataset_cache` set, an existing
/// cache file is loaded as-is; otherwise the dataset is built and the cache
/// written.
pub fn build_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    if let Some(cache) = &config.dataset_cache {
        if cache.exists() {
            return dataio::load_dataset(cache);
        }
        let dataset = build_fresh(config)?;
        dataio::save_dataset(cache, &dataset)?;
        return Ok(dataset);
    }
    build_fresh(config)
}
