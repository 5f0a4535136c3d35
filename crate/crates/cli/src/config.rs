//! Flat key-value experiment configuration.
//!
//! The on-disk format is one `key = value` pair per line, `#` comments,
//! UTF-8. Every key has a default except `dataset`; unknown and duplicate
//! keys are rejected. `to_text` emits every key in a fixed order with
//! canonical value formatting, so parse -> serialize -> parse is identity.
//!
//! ```text
//! # minimal experiment
//! dataset = synthetic
//! mode = federate
//! epsilon = 10
//! ```
//!
//! List values are comma-separated (`encoder_hidden = 64,16`); float grids
//! also accept `start:end:step` sugar (`lambda_grid = 0.1:3.0:0.2`).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use federate_core::metrics::DEFAULT_BLOCK_FRACTIONS;
use federate_core::select::{default_epsilon_grid, default_lambda_grid, SweepGrid};
use federate_core::train::{Mode, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    Synthetic,
    Adult,
}

impl DataSource {
    fn as_str(&self) -> &'static str {
        match self {
            DataSource::Synthetic => "synthetic",
            DataSource::Adult => "adult",
        }
    }
}

impl FromStr for DataSource {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<DataSource> {
        match s {
            "synthetic" => Ok(DataSource::Synthetic),
            "adult" => Ok(DataSource::Adult),
            other => bail!("unknown dataset source '{other}' (expected synthetic|adult)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl ReportFormat {
    fn as_str(&self) -> &'static str {
        match self {
            ReportFormat::Markdown => "markdown",
            ReportFormat::Csv => "csv",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<ReportFormat> {
        match s {
            "markdown" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => bail!("unknown report format '{other}' (expected markdown|csv)"),
        }
    }
}

/// Synthetic generator knobs: two classes at `±class_sep` on axis 0 and a
/// group shift of `±group_shift` on axis 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n: usize,
    pub dim: usize,
    pub class_sep: f64,
    pub group_shift: f64,
    pub noise_std: f64,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DataSource,
    pub adult_path: Option<PathBuf>,
    /// When set: load the dataset from this cache if present, otherwise
    /// build it and write the cache.
    pub dataset_cache: Option<PathBuf>,
    pub data_seed: u64,
    pub split: [f64; 3],
    /// Train-split skew fractions for cells (y=1,z=1), (y=0,z=1),
    /// (y=1,z=0), (y=0,z=0); `None` leaves the train split untouched.
    pub skew: Option<[f64; 4]>,
    pub synth: SynthParams,
    pub train: TrainConfig,
    pub sweep_modes: Vec<Mode>,
    pub lambda_grid: Vec<f64>,
    pub epsilon_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Sweep worker threads; 0 means one per core. The FEDERATE_WORKERS
    /// environment variable overrides this at run time.
    pub workers: usize,
    /// Emit one random-reference row per seed into sweep results.
    pub include_random: bool,
    pub probe_hidden: Vec<usize>,
    pub mdl_fractions: Vec<f64>,
    pub probe_seed: u64,
    pub results_path: PathBuf,
    pub log_path: Option<PathBuf>,
    pub report_format: ReportFormat,
    pub report_rt: f64,
    /// Prefix for representation dumps written after `train`.
    pub dump_reps: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "dataset",
    "adult_path",
    "dataset_cache",
    "data_seed",
    "split",
    "skew",
    "synth_n",
    "synth_dim",
    "synth_class_sep",
    "synth_group_shift",
    "synth_noise_std",
    "mode",
    "lr",
    "batch_size",
    "epochs",
    "lambda_max",
    "schedule_scale",
    "epsilon",
    "seed",
    "encoder_hidden",
    "classifier_hidden",
    "adversary_hidden",
    "dropout",
    "sweep_modes",
    "lambda_grid",
    "epsilon_grid",
    "seeds",
    "workers",
    "include_random",
    "probe_hidden",
    "mdl_fractions",
    "probe_seed",
    "results_path",
    "log_path",
    "report_format",
    "report_rt",
    "dump_reps",
];

fn default_config() -> ExperimentConfig {
    ExperimentConfig {
        dataset: DataSource::Synthetic,
        adult_path: None,
        dataset_cache: None,
        data_seed: 7,
        split: [0.6, 0.2, 0.2],
        skew: None,
        synth: SynthParams { n: 6000, dim: 8, class_sep: 1.0, group_shift: 1.0, noise_std: 1.0 },
        train: TrainConfig::new(Mode::Unconstrained),
        sweep_modes: vec![Mode::Unconstrained, Mode::Noise, Mode::Adversarial, Mode::Federate],
        lambda_grid: default_lambda_grid(),
        epsilon_grid: default_epsilon_grid(),
        seeds: vec![0, 1, 2, 3, 4],
        workers: 0,
        include_random: true,
        probe_hidden: vec![64, 64],
        mdl_fractions: DEFAULT_BLOCK_FRACTIONS.to_vec(),
        probe_seed: 0,
        results_path: PathBuf::from("runs.jsonl"),
        log_path: None,
        report_format: ReportFormat::Markdown,
        report_rt: 1.0,
        dump_reps: None,
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.parse::<f64>().with_context(|| format!("key '{key}': '{value}' is not a number"))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|part| {
            let part = part.trim();
            part.parse::<T>()
                .map_err(|e| anyhow::anyhow!("key '{key}': bad list element '{part}': {e}"))
        })
        .collect()
}

/// Float lists with `start:end:step` sugar.
fn parse_f64_grid(key: &str, value: &str) -> Result<Vec<f64>> {
    if let Some((start, rest)) = value.split_once(':') {
        let (end, step) = rest
            .split_once(':')
            .with_context(|| format!("key '{key}': range form is start:end:step"))?;
        let (start, end, step) =
            (parse_f64(key, start.trim())?, parse_f64(key, end.trim())?, parse_f64(key, step.trim())?);
        if step <= 0.0 || end < start {
            bail!("key '{key}': range needs step > 0 and end >= start");
        }
        let mut out = Vec::new();
        let mut k = 0u32;
        loop {
            let v = start + step * k as f64;
            if v > end + 1e-9 {
                break;
            }
            out.push(v);
            k += 1;
        }
        Ok(out)
    } else {
        parse_list::<f64>(key, value)
    }
}

fn fmt_f64_list(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn fmt_usize_list(values: &[usize]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parses a config from an optional file plus `key=value` overrides
    /// (applied in order after the file) and validates it.
    pub fn from_sources(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
        let mut config = default_config();
        let mut seen = BTreeSet::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            config.apply_text(&text, &mut seen)?;
        }
        for entry in overrides {
            let (key, value) = entry
                .split_once('=')
                .with_context(|| format!("override '{entry}' is not of the form key=value"))?;
            // Overrides may repeat file keys; only in-file duplicates are
            // rejected, so drop the seen mark first.
            let key = key.trim();
            seen.remove(key);
            config.apply(key, value.trim(), &mut seen)?;
        }
        if !seen.contains("dataset") {
            bail!("missing required key 'dataset' (synthetic|adult)");
        }
        // Paper-styled epoch defaults differ per dataset; honor an explicit
        // value when given.
        if !seen.contains("epochs") {
            config.train.epochs = match config.dataset {
                DataSource::Synthetic => 30,
                DataSource::Adult => 40,
            };
        }
        config.validate()?;
        Ok(config)
    }

    /// Parses config text alone (used by round-trip tests).
    pub fn parse_text(text: &str) -> Result<ExperimentConfig> {
        let mut config = default_config();
        let mut seen = BTreeSet::new();
        config.apply_text(text, &mut seen)?;
        if !seen.contains("dataset") {
            bail!("missing required key 'dataset' (synthetic|adult)");
        }
        config.validate()?;
        Ok(config)
    }

    fn apply_text(&mut self, text: &str, seen: &mut BTreeSet<String>) -> Result<()> {
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected 'key = value'", line_no + 1))?;
            self.apply(key.trim(), value.trim(), seen)?;
        }
        Ok(())
    }

    fn apply(&mut self, key: &str, value: &str, seen: &mut BTreeSet<String>) -> Result<()> {
        if !KEYS.contains(&key) {
            bail!("unknown configuration key '{key}'");
        }
        if !seen.insert(key.to_string()) {
            bail!("duplicate configuration key '{key}'");
        }
        let opt_path = |v: &str| -> Option<PathBuf> {
            if v.is_empty() {
                None
            } else {
                Some(PathBuf::from(v))
            }
        };
        match key {
            "dataset" => self.dataset = value.parse()?,
            "adult_path" => self.adult_path = opt_path(value),
            "dataset_cache" => self.dataset_cache = opt_path(value),
            "data_seed" => self.data_seed = value.parse().context("key 'data_seed'")?,
            "split" => {
                let parts: Vec<f64> = parse_list(key, value)?;
                let [a, b, c] = parts.as_slice() else {
                    bail!("key 'split': expected exactly 3 fractions");
                };
                self.split = [*a, *b, *c];
            }
            "skew" => {
                if value.is_empty() {
                    self.skew = None;
                } else {
                    let parts: Vec<f64> = parse_list(key, value)?;
                    let [a, b, c, d] = parts.as_slice() else {
                        bail!("key 'skew': expected 4 fractions for cells (1,1),(0,1),(1,0),(0,0)");
                    };
                    self.skew = Some([*a, *b, *c, *d]);
                }
            }
            "synth_n" => self.synth.n = value.parse().context("key 'synth_n'")?,
            "synth_dim" => self.synth.dim = value.parse().context("key 'synth_dim'")?,
            "synth_class_sep" => self.synth.class_sep = parse_f64(key, value)?,
            "synth_group_shift" => self.synth.group_shift = parse_f64(key, value)?,
            "synth_noise_std" => self.synth.noise_std = parse_f64(key, value)?,
            "mode" => {
                self.train.mode =
                    value.parse().map_err(|e| anyhow::anyhow!("key 'mode': {e}"))?
            }
            "lr" => self.train.lr = parse_f64(key, value)?,
            "batch_size" => self.train.batch_size = value.parse().context("key 'batch_size'")?,
            "epochs" => self.train.epochs = value.parse().context("key 'epochs'")?,
            "lambda_max" => self.train.lambda_max = parse_f64(key, value)?,
            "schedule_scale" => self.train.schedule_scale = parse_f64(key, value)?,
            "epsilon" => self.train.epsilon = parse_f64(key, value)?,
            "seed" => self.train.seed = value.parse().context("key 'seed'")?,
            "encoder_hidden" => self.train.encoder_hidden = parse_list(key, value)?,
            "classifier_hidden" => self.train.classifier_hidden = parse_list(key, value)?,
            "adversary_hidden" => self.train.adversary_hidden = parse_list(key, value)?,
            "dropout" => self.train.dropout = parse_f64(key, value)?,
            "sweep_modes" => {
                self.sweep_modes = value
                    .split(',')
                    .map(|m| m.trim().parse::<Mode>())
                    .collect::<federate_core::Result<_>>()
                    .map_err(|e| anyhow::anyhow!("key 'sweep_modes': {e}"))?;
            }
            "lambda_grid" => self.lambda_grid = parse_f64_grid(key, value)?,
            "epsilon_grid" => self.epsilon_grid = parse_f64_grid(key, value)?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "workers" => self.workers = value.parse().context("key 'workers'")?,
            "include_random" => {
                self.include_random = match value {
                    "true" => true,
                    "false" => false,
                    other => bail!("key 'include_random': '{other}' is not true|false"),
                }
            }
            "probe_hidden" => self.probe_hidden = parse_list(key, value)?,
            "mdl_fractions" => self.mdl_fractions = parse_list(key, value)?,
            "probe_seed" => self.probe_seed = value.parse().context("key 'probe_seed'")?,
            "results_path" => self.results_path = PathBuf::from(value),
            "log_path" => self.log_path = opt_path(value),
            "report_format" => self.report_format = value.parse()?,
            "report_rt" => self.report_rt = parse_f64(key, value)?,
            "dump_reps" => self.dump_reps = opt_path(value),
            _ => unreachable!("key membership checked above"),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.dataset == DataSource::Adult {
            let path = self
                .adult_path
                .as_ref()
                .context("dataset = adult requires adult_path")?;
            if !path.exists() {
                bail!("adult_path {} does not exist", path.display());
            }
        }
        if (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9
            || self.split.iter().any(|&f| f <= 0.0)
        {
            bail!("key 'split': fractions must be positive and sum to 1");
        }
        if let Some(skew) = &self.skew {
            if (skew.iter().sum::<f64>() - 1.0).abs() > 1e-9 || skew.iter().any(|&f| f < 0.0) {
                bail!("key 'skew': fractions must be non-negative and sum to 1");
            }
        }
        if !(self.train.epsilon > 0.0) {
            bail!("key 'epsilon': must be positive, got {}", self.train.epsilon);
        }
        if self.epsilon_grid.iter().any(|&e| e <= 0.0) {
            bail!("key 'epsilon_grid': budgets must be positive");
        }
        if self.lambda_grid.iter().any(|&l| l < 0.0) {
            bail!("key 'lambda_grid': values must be non-negative");
        }
        if self.report_rt < 0.0 {
            bail!("key 'report_rt': must be non-negative");
        }
        if self.synth.dim < 2 {
            bail!("key 'synth_dim': must be at least 2");
        }
        if !(self.synth.noise_std > 0.0) {
            bail!("key 'synth_noise_std': must be positive");
        }
        self.train
            .validate()
            .map_err(|e| anyhow::anyhow!("train configuration: {e}"))?;
        Ok(())
    }

    /// Canonical serialization: every key, fixed order, parse-stable value
    /// formatting.
    pub fn to_text(&self) -> String {
        let path_str = |p: &Option<PathBuf>| {
            p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
        };
        let mut out = String::new();
        let mut emit = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        emit("dataset", self.dataset.as_str().to_string());
        emit("adult_path", path_str(&self.adult_path));
        emit("dataset_cache", path_str(&self.dataset_cache));
        emit("data_seed", self.data_seed.to_string());
        emit("split", fmt_f64_list(&self.split));
        emit("skew", self.skew.map(|s| fmt_f64_list(&s)).unwrap_or_default());
        emit("synth_n", self.synth.n.to_string());
        emit("synth_dim", self.synth.dim.to_string());
        emit("synth_class_sep", self.synth.class_sep.to_string());
        emit("synth_group_shift", self.synth.group_shift.to_string());
        emit("synth_noise_std", self.synth.noise_std.to_string());
        emit("mode", self.train.mode.to_string());
        emit("lr", self.train.lr.to_string());
        emit("batch_size", self.train.batch_size.to_string());
        emit("epochs", self.train.epochs.to_string());
        emit("lambda_max", self.train.lambda_max.to_string());
        emit("schedule_scale", self.train.schedule_scale.to_string());
        emit("epsilon", self.train.epsilon.to_string());
        emit("seed", self.train.seed.to_string());
        emit("encoder_hidden", fmt_usize_list(&self.train.encoder_hidden));
        emit("classifier_hidden", fmt_usize_list(&self.train.classifier_hidden));
        emit("adversary_hidden", fmt_usize_list(&self.train.adversary_hidden));
        emit("dropout", self.train.dropout.to_string());
        emit(
            "sweep_modes",
            self.sweep_modes.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(","),
        );
        emit("lambda_grid", fmt_f64_list(&self.lambda_grid));
        emit("epsilon_grid", fmt_f64_list(&self.epsilon_grid));
        emit("seeds", self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
        emit("workers", self.workers.to_string());
        emit("include_random", self.include_random.to_string());
        emit("probe_hidden", fmt_usize_list(&self.probe_hidden));
        emit("mdl_fractions", fmt_f64_list(&self.mdl_fractions));
        emit("probe_seed", self.probe_seed.to_string());
        emit("results_path", self.results_path.display().to_string());
        emit("log_path", path_str(&self.log_path));
        emit("report_format", self.report_format.as_str().to_string());
        emit("report_rt", self.report_rt.to_string());
        emit("dump_reps", path_str(&self.dump_reps));
        out
    }

    /// The sweep grid implied by this config.
    pub fn sweep_grid(&self) -> SweepGrid {
        SweepGrid {
            modes: self.sweep_modes.clone(),
            lambda_max: self.lambda_grid.clone(),
            epsilons: self.epsilon_grid.clone(),
            seeds: self.seeds.clone(),
        }
    }
}
