//! `federate`: train and evaluate differentially private, adversarially
//! debiased representations; sweep hyperparameter grids; audit the privacy
//! mechanism; render result tables.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use federate_cli::config::{ExperimentConfig, ReportFormat};
use federate_cli::{audit, dataio, dataset, report, sweep};
use federate_core::metrics::{leakage_probe, mdl_online, PrivacyScore, ProbeConfig};
use federate_core::rng::{self, tag};
use federate_core::train::{encode_eval, history_to_jsonl, train_run};

#[derive(Parser)]
#[command(name = "federate", version, about = "Private and fair representation learning harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline overrides, e.g. --set mode=federate --set epsilon=10.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_sources(self.config.as_deref(), &self.set)
    }
}

#[derive(Args)]
struct ProbeCommonArgs {
    /// Probe hidden layer widths.
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 64])]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    probe_seed: u64,
    /// Write the JSON result here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write its result payload.
    Train(ExperimentArgs),
    /// Run the hyperparameter grid (resumable, parallel).
    Sweep(ExperimentArgs),
    /// Leakage of a stored representation dump: train the probe on one
    /// dump, evaluate on another.
    Probe {
        #[command(flatten)]
        common: ProbeCommonArgs,
        #[arg(long)]
        train_reps: PathBuf,
        #[arg(long)]
        train_z: PathBuf,
        #[arg(long)]
        test_reps: PathBuf,
        #[arg(long)]
        test_z: PathBuf,
    },
    /// Online-coding MDL of a stored representation dump.
    Mdl {
        #[command(flatten)]
        common: ProbeCommonArgs,
        #[arg(long)]
        reps: PathBuf,
        #[arg(long)]
        z: PathBuf,
        /// Cumulative block fractions (strictly increasing, ending at 1.0).
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
    },
    /// Sensitivity audits and DP ratio tests for both normalizers.
    Audit {
        /// Mechanism samples per input for the ratio tests.
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the results table from a sweep results file.
    Report {
        /// Results file (JSON lines). Defaults to the config's
        /// results_path, or runs.jsonl.
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
        /// Relaxation threshold in accuracy points.
        #[arg(long)]
        rt: Option<f64>,
        /// Prefer lower measured leakage as a third selection criterion.
        #[arg(long, default_value_t = false)]
        select_privacy: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        experiment: ExperimentArgs,
    },
}

fn cmd_train(args: &ExperimentArgs) -> Result<()> {
    let config = args.load()?;
    let data = dataset::build_dataset(&config)?;
    let outcome = train_run(&config.train, &data).map_err(|e| anyhow::anyhow!("{e}"))?;

    let payload = serde_json::to_string(&outcome.result)?;
    std::fs::write(&config.results_path, format!("{payload}\n"))
        .with_context(|| format!("writing {}", config.results_path.display()))?;
    if let Some(log_path) = &config.log_path {
        std::fs::write(log_path, history_to_jsonl(&outcome.history))
            .with_context(|| format!("writing {}", log_path.display()))?;
    }
    if let Some(prefix) = &config.dump_reps {
        let privacy = config.train.privacy().map_err(|e| anyhow::anyhow!("{e}"))?;
        let dump_seed = rng::derive_seed(config.train.seed, tag::EVAL_NOISE);
        for (split, split_name, stream_tag) in [
            (federate_core::data::Split::Valid, "valid", 5u64),
            (federate_core::data::Split::Test, "test", 6u64),
        ] {
            let part = data.split_data(split);
            let mut noise = rng::stream(dump_seed, stream_tag);
            let reps = encode_eval(&outcome.model, &part.features, privacy.as_ref(), &mut noise)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let base = prefix.display();
            dataio::save_matrix(&PathBuf::from(format!("{base}.{split_name}.reps")), &reps)?;
            dataio::save_labels(
                &PathBuf::from(format!("{base}.{split_name}.z")),
                &part.sensitive,
            )?;
        }
    }
    println!(
        "{} seed {}: val acc {:.2} gap {:.2} | test acc {:.2} gap {:.2} leakage {} mdl {:.1}",
        outcome.result.mode,
        outcome.result.seed,
        outcome.result.val.acc,
        outcome.result.val.gap,
        outcome.result.test.acc,
        outcome.result.test.gap,
        outcome
            .result
            .test
            .leakage
            .map(|l| format!("{l:.2}"))
            .unwrap_or_else(|| "-".to_string()),
        outcome.result.test.mdl_bits,
    );
    println!("result written to {}", config.results_path.display());
    Ok(())
}

fn cmd_sweep(args: &ExperimentArgs) -> Result<()> {
    let config = args.load()?;
    let data = dataset::build_dataset(&config)?;
    let grid = config.sweep_grid();
    let summary = sweep::run_sweep_to_file(
        &grid,
        &data,
        &config.train,
        &config.results_path,
        config.workers,
        config.include_random,
    )?;
    println!(
        "sweep: {} executed ({} failed), {} skipped as already present; results in {}",
        summary.executed,
        summary.failed,
        summary.skipped,
        config.results_path.display()
    );
    Ok(())
}

fn emit_score(score: &PrivacyScore, out: Option<&PathBuf>) -> Result<()> {
    let json = serde_json::to_string(score)?;
    println!("{json}");
    if let Some(path) = out {
        std::fs::write(path, format!("{json}\n"))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Probe { common, train_reps, train_z, test_reps, test_z } => {
            let probe = ProbeConfig {
                hidden: common.hidden.clone(),
                seed: common.probe_seed,
                ..ProbeConfig::default()
            };
            let leakage = leakage_probe(
                &dataio::load_matrix(train_reps)?,
                &dataio::load_labels(train_z)?,
                &dataio::load_matrix(test_reps)?,
                &dataio::load_labels(test_z)?,
                &probe,
            )
            .map_err(|e| anyhow::anyhow!("{e}"))?;
            let score = PrivacyScore {
                leakage: Some(100.0 * leakage),
                mdl_bits: None,
                uniform_bits: None,
            };
            emit_score(&score, common.out.as_ref())
        }
        Command::Mdl { common, reps, z, fractions } => {
            let mut probe = ProbeConfig {
                hidden: common.hidden.clone(),
                seed: common.probe_seed,
                ..ProbeConfig::default()
            };
            if let Some(fractions) = fractions {
                probe.block_fractions = fractions.clone();
            }
            let report = mdl_online(&dataio::load_matrix(reps)?, &dataio::load_labels(z)?, &probe)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let score = PrivacyScore {
                leakage: None,
                mdl_bits: Some(report.mdl_bits),
                uniform_bits: Some(report.uniform_bits),
            };
            emit_score(&score, common.out.as_ref())
        }
        Command::Audit { samples, seed, out } => {
            let report = audit::run_audit(*samples, *seed)?;
            print!("{}", audit::render_text(&report));
            if let Some(path) = out {
                std::fs::write(path, serde_json::to_string_pretty(&report)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let all_sensitivity_ok =
                report.sensitivity.iter().all(|l| l.report.max_l1_distance <= l.report.bound + 1e-9);
            anyhow::ensure!(all_sensitivity_ok, "a sensitivity audit exceeded its bound");
            Ok(())
        }
        Command::Report { results, format, rt, select_privacy, out, experiment } => {
            // Config is optional here; flags win over config values.
            let config = if experiment.config.is_some() || !experiment.set.is_empty() {
                Some(experiment.load()?)
            } else {
                None
            };
            let results_path = results
                .clone()
                .or_else(|| config.as_ref().map(|c| c.results_path.clone()))
                .unwrap_or_else(|| PathBuf::from("runs.jsonl"));
            let format = match format {
                Some(f) => f.parse::<ReportFormat>()?,
                None => config.as_ref().map(|c| c.report_format).unwrap_or(ReportFormat::Markdown),
            };
            let rt = rt.or_else(|| config.as_ref().map(|c| c.report_rt)).unwrap_or(1.0);
            let entries = sweep::load_entries(&results_path)?;
            let failures = entries.iter().filter(|e| e.result().is_none()).count();
            if failures > 0 {
                eprintln!("note: {failures} failed runs recorded in {}", results_path.display());
            }
            let results: Vec<_> = entries.iter().filter_map(|e| e.result().cloned()).collect();
            let rows = report::build_rows_opts(&results, rt, *select_privacy)?;
            let rendered = report::render(&rows, format, rt);
            print!("{rendered}");
            if let Some(path) = out {
                std::fs::write(path, &rendered)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
    }
}
