//! Command layer behind the `optobell` binary. Every subcommand is a plain
//! function returning a [`RunReport`]; [`run`] only parses, prints and maps
//! the report to an exit status (0 pass, 2 out of range, 1 error).

mod commands;
mod report;

pub use commands::{
    analyze_sweep, chsh_tables, cmd_analyze, cmd_fit, cmd_reproduce, cmd_simulate, load_reference_counts,
    report_status, reproduce_from, sha256_hex, simulate_counts, simulation_jobs, write_atomic, AnalyzeMode, FitModel,
    Job, Measurement, OutputFormat, SimulateOptions, CHSH_LABELS, DATA_DIR_ENV, REFERENCE_COUNTS_FILE,
    REFERENCE_COUNTS_SHA256, REPRODUCE_ACCEPT,
};
pub use report::{CrossCorrelationReport, InputDigest, OccupancyReport, Provenance, RunReport};

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::model::{ExperimentConfig, ModelError};
use crate::sampler::SamplerError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{name} is corrupted: sha256 {found}, expected {expected}")]
    Corrupted { name: String, expected: String, found: String },
    #[error("missing settings: {}", fmt_labels(.0))]
    MissingSettings(Vec<(u8, u8)>),
    #[error("inputs mix click records and counts files")]
    MixedFormats,
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {reason}")]
    Input { path: String, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn input(path: impl AsRef<Path>, reason: impl std::fmt::Display) -> Self {
        Self::Input {
            path: path.as_ref().display().to_string(),
            reason: reason.to_string(),
        }
    }
}

fn fmt_labels(labels: &[(u8, u8)]) -> String {
    labels
        .iter()
        .map(|(i, j)| format!("({i},{j})"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Parser)]
#[command(name = "optobell", version, about = "Simulate and analyze heralded optomechanical Bell tests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recompute the CHSH result from the bundled coincidence counts.
    Reproduce {
        /// Show only this setting's correlation row.
        #[arg(long, value_parser = parse_setting)]
        setting: Option<(u8, u8)>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sample trials from the model, one output file per setting.
    Simulate(SimulateArgs),
    /// Run an estimator over simulated or recorded files.
    Analyze {
        #[arg(long, value_enum)]
        mode: AnalyzeMode,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit a point file with columns x,y,sigma.
    Fit {
        #[arg(value_enum)]
        model: FitModel,
        path: PathBuf,
        /// Hold the initial occupation fixed (heating fits only).
        #[arg(long)]
        n_init: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Reference,
    Ideal,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML configuration; defaults to the selected preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "reference")]
    pub preset: Preset,
    /// Switch off leaked drive photons.
    #[arg(long)]
    pub without_leaks: bool,
    /// Switch off leaks and dark counts.
    #[arg(long)]
    pub without_background: bool,
    #[arg(long, value_enum, default_value = "chsh")]
    pub measurement: Measurement,
    /// CHSH setting `i,j`; repeat for several, default all four.
    #[arg(long, value_parser = parse_setting)]
    pub setting: Vec<(u8, u8)>,
    /// Points of a sweep measurement.
    #[arg(long, default_value_t = 12)]
    pub points: usize,
    #[arg(long)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "counts")]
    pub format: OutputFormat,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `i,j`.
pub fn parse_setting(s: &str) -> Result<(u8, u8), String> {
    let (i, j) = s.split_once(',').ok_or_else(|| format!("expected i,j, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<u8>().map_err(|e| format!("{x:?}: {e}"));
    Ok((parse(i)?, parse(j)?))
}

impl SimulateArgs {
    pub fn options(&self) -> Result<SimulateOptions, CliError> {
        let (mut config, source) = match &self.config {
            Some(path) => {
                let text = commands::read_text(path)?;
                let config = ExperimentConfig::from_toml_str(&text).map_err(|e| CliError::input(path, e))?;
                let digest = InputDigest {
                    name: path.display().to_string(),
                    sha256: sha256_hex(text.as_bytes()),
                };
                (config, Some(digest))
            }
            None => match self.preset {
                Preset::Reference => (ExperimentConfig::reference(), None),
                Preset::Ideal => (ExperimentConfig::ideal(), None),
            },
        };
        if self.without_background {
            config = config.without_background();
        } else if self.without_leaks {
            config = config.without_leaks();
        }
        Ok(SimulateOptions {
            config,
            config_source: source,
            measurement: self.measurement,
            settings: self.setting.clone(),
            points: self.points,
            trials: self.trials,
            seed: self.seed,
            out_dir: self.out.clone(),
            format: self.format,
        })
    }
}

/// Executes a parsed command, printing to `out`; returns the exit status.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let (report, output) = match &cli.command {
        Command::Reproduce { setting, output } => (cmd_reproduce(*setting)?, output),
        Command::Simulate(args) => (cmd_simulate(&args.options()?)?, &args.output),
        Command::Analyze { mode, inputs, output } => (cmd_analyze(inputs, *mode)?, output),
        Command::Fit {
            model,
            path,
            n_init,
            output,
        } => (cmd_fit(path, *model, *n_init)?, output),
    };
    let json = report.to_json();
    if let Some(path) = &output.report {
        write_atomic(path, format!("{json}\n").as_bytes())?;
    }
    let text = if output.json { format!("{json}\n") } else { report.render() };
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    Ok(report_status(&report))
}

/// Entry point of the binary.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
