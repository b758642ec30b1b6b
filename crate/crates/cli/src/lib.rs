//! Command-line driver: every stage of the experiment as a subcommand, plus
//! the HTTP forecast service.

pub mod http;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use driftcast::exec::set_worker_threads;
use driftcast::experiment::{
    build_interval_data, comparison_table, cross_validation_table, load_saved_predictors, load_source, run_experiment,
    save_predictors, train_grid, write_artifact, write_report, ExperimentConfig, SourceConfig,
};
use driftcast::ingest::{ingest_files, write_ais_csv};
use driftcast::serve::load_registry_dir;
use driftcast::synth::generate_fleet;
use driftcast::Execution;

#[derive(Debug, Parser)]
#[command(name = "driftcast", version, about = "Vessel position forecasting from AIS reports")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the configured fleet and write its reports as CSV.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Output file [default: <output_dir>/data/reports.csv]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and filter AIS CSV files into one cleaned CSV.
    Ingest {
        #[command(flatten)]
        common: Common,
        /// Input files, replacing the config's csv source.
        #[arg(long, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Output file [default: <output_dir>/data/reports.csv]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the per-interval datasets and write them as CSV.
    Dataset {
        #[command(flatten)]
        common: Common,
    },
    /// Train the model grid and save one model file per model and interval.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Cross-validate the model grid.
    Cv {
        #[command(flatten)]
        common: Common,
        /// Number of folds.
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Score saved models against the kinematic baseline on the test split.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Run every stage and write a manifest.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Answer forecast queries over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExecArg {
    Sequential,
    Parallel,
}

/// Flags shared by the experiment subcommands; each overrides the config.
#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Comma-separated prediction intervals in minutes.
    #[arg(long, value_delimiter = ',')]
    pub intervals: Option<Vec<u32>>,
    #[arg(long, value_enum)]
    pub execution: Option<ExecArg>,
    /// Worker threads for parallel execution.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Keep only these model labels from the grid (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory of model files, one per interval.
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    /// Experiment config; serves <output_dir>/models/<predictor>.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Model label to serve when reading the config.
    #[arg(long, default_value = "mlp-10")]
    pub predictor: String,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: String,
}

impl Common {
    /// Loads the config, applies overrides and validates the result.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(iv) = &self.intervals {
            cfg.intervals = iv.clone();
        }
        if let Some(e) = self.execution {
            cfg.execution = match e {
                ExecArg::Sequential => Execution::Sequential,
                ExecArg::Parallel => Execution::Parallel,
            };
        }
        if let Some(only) = &self.only {
            for label in only {
                if !cfg.models.iter().any(|m| &m.label() == label) {
                    let known: Vec<String> = cfg.models.iter().map(|m| m.label()).collect();
                    bail!("--only {label}: not in the model grid ({})", known.join(", "));
                }
            }
            cfg.models.retain(|m| only.contains(&m.label()));
        }
        if let Some(n) = self.threads {
            set_worker_threads(n).map_err(anyhow::Error::msg).context("--threads")?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| parent.display().to_string())?;
    }
    fs::write(path, bytes).with_context(|| path.display().to_string())
}

fn reports_path(cfg: &ExperimentConfig, out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| cfg.output_dir.join("data/reports.csv"))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { common, out } => {
            let cfg = common.resolve()?;
            let SourceConfig::Synth { fleet } = &cfg.source else {
                bail!("synth needs a synth source in the config");
            };
            let records = generate_fleet(fleet, cfg.execution)?;
            let mut buf = Vec::new();
            write_ais_csv(&mut buf, &records)?;
            let path = reports_path(&cfg, &out);
            write_file(&path, &buf)?;
            println!("wrote {} reports from {} vessels to {}", records.len(), fleet.n_vessels, path.display());
        }
        Command::Ingest { common, input, out } => {
            let cfg = common.resolve()?;
            let paths = match (&cfg.source, input.is_empty()) {
                (_, false) => input,
                (SourceConfig::Csv { paths }, true) => paths.clone(),
                (SourceConfig::Synth { .. }, true) => bail!("ingest needs --input or a csv source in the config"),
            };
            let outcome = ingest_files(&paths, &cfg.filter, cfg.execution)?;
            for (path, e) in &outcome.parse_errors {
                eprintln!("{}: {e}", path.display());
            }
            let mut buf = Vec::new();
            write_ais_csv(&mut buf, &outcome.records)?;
            let path = reports_path(&cfg, &out);
            write_file(&path, &buf)?;
            println!(
                "kept {} reports ({} malformed lines, {} filtered) -> {}",
                outcome.records.len(),
                outcome.parse_errors.len(),
                outcome.dropped.values().sum::<usize>(),
                path.display()
            );
            for (reason, n) in &outcome.dropped {
                println!("  dropped {n}: {reason}");
            }
        }
        Command::Dataset { common } => {
            let cfg = common.resolve()?;
            let (records, _) = load_source(&cfg, cfg.execution)?;
            let data = build_interval_data(&cfg, &records, cfg.execution)?;
            println!("interval_min,point_instances,train,test,window_instances");
            for d in &data {
                let mut buf = Vec::new();
                d.point.write_csv(&mut buf)?;
                write_artifact(&cfg.output_dir, &format!("data/points-interval-{:03}.csv", d.interval_min), &buf)
                    .map_err(anyhow::Error::msg)?;
                let windows = match &d.window {
                    Some(w) => {
                        let mut buf = Vec::new();
                        w.all.write_csv(&mut buf)?;
                        write_artifact(&cfg.output_dir, &format!("data/windows-interval-{:03}.csv", d.interval_min), &buf)
                            .map_err(anyhow::Error::msg)?;
                        w.all.len().to_string()
                    }
                    None => "-".into(),
                };
                println!("{},{},{},{},{windows}", d.interval_min, d.point.len(), d.train.len(), d.test.len());
            }
        }
        Command::Train { common } => {
            let cfg = common.resolve()?;
            let (records, _) = load_source(&cfg, cfg.execution)?;
            let data = build_interval_data(&cfg, &records, cfg.execution)?;
            let predictors = train_grid(&cfg, &data, cfg.execution)?;
            let saved = save_predictors(&cfg.output_dir, &predictors).map_err(anyhow::Error::msg)?;
            for m in &saved {
                println!("{} {} min n_train={} -> {}", m.predictor, m.interval_min, m.n_train, m.file.path);
            }
        }
        Command::Cv { common, folds } => {
            let mut cfg = common.resolve()?;
            if let Some(k) = folds {
                cfg.folds = k;
            }
            if cfg.folds < 2 {
                bail!("cross-validation needs at least 2 folds");
            }
            let (records, _) = load_source(&cfg, cfg.execution)?;
            let data = build_interval_data(&cfg, &records, cfg.execution)?;
            let table = cross_validation_table(&cfg, &data, cfg.execution)?;
            write_report(&cfg.output_dir, "cross_validation", &table.to_csv(), &table.to_text())
                .map_err(anyhow::Error::msg)?;
            print!("{}", table.to_text());
        }
        Command::Compare { common } => {
            let cfg = common.resolve()?;
            let predictors = load_saved_predictors(&cfg).context("run `driftcast train` first")?;
            let (records, _) = load_source(&cfg, cfg.execution)?;
            let data = build_interval_data(&cfg, &records, cfg.execution)?;
            let table = comparison_table(&data, &predictors, cfg.execution)?;
            write_report(&cfg.output_dir, "comparison", &table.to_csv(), &table.to_text()).map_err(anyhow::Error::msg)?;
            print!("{}", table.to_text());
        }
        Command::Run { common } => {
            let cfg = common.resolve()?;
            let manifest = run_experiment(&cfg)?;
            println!(
                "{} model file(s), {} report(s); manifest at {}",
                manifest.models.len(),
                manifest.reports.len(),
                cfg.output_dir.join(driftcast::experiment::MANIFEST_FILE).display()
            );
        }
        Command::Serve(args) => {
            let dir = match (&args.model_dir, &args.config) {
                (Some(dir), _) => dir.clone(),
                (None, Some(path)) => ExperimentConfig::load(path)?.output_dir.join("models").join(&args.predictor),
                (None, None) => bail!("serve needs --model-dir or --config"),
            };
            let registry = load_registry_dir(&dir)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(http::serve(registry, &args.listen))?;
        }
    }
    Ok(())
}
