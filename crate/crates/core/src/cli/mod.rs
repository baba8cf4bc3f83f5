//! The `contests` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 malformed input
//! (first offending `file:line` on stderr), 3 empty input, 4 statistically
//! infeasible request (the offending design column is named).

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_entropy, cmd_ranks, cmd_regress, cmd_synth, cmd_test};
pub use config::{ConfigFile, RunConfig, SynthMode, CONFIG_VERSION, OUT_DIR_ENV};

use crate::records::LogProbField;
use crate::stats::{CorrelationKind, RegressionMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_EMPTY: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

/// A failed command: exit code plus the message for stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn empty(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_EMPTY,
            message: message.into(),
        }
    }

    pub fn infeasible(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INFEASIBLE,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "contests", version, about = "Consistency tests for language-model joint probabilities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Signed-rank test per model×dataset cell; writes report.json,
    /// report.csv and boxplot.csv.
    Test,
    /// Regresses per-model discrepancy variance on model attributes; writes
    /// regression.csv.
    Regress,
    /// Entropy–discrepancy correlations and per-record decoding orders;
    /// writes entropy.csv and orders.jsonl.
    Entropy,
    /// Rank and EOS quartiles per model; writes comprehension.csv.
    Ranks,
    /// Generates oracle records from a word-pair TSV; writes records.jsonl,
    /// models.jsonl and datasets.jsonl.
    Synth,
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Flat TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Record JSONL file; repeat for several.
    #[arg(long, global = true, num_args = 1..)]
    pub records: Vec<PathBuf>,
    /// Model metadata JSONL.
    #[arg(long, global = true)]
    pub models: Option<PathBuf>,
    /// A report.json from a previous `test` run (regress only).
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Output directory [env: CONTESTS_OUT_DIR; default: .]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Regression design: COARSE or FINE.
    #[arg(long, global = true)]
    pub mode: Option<RegressionMode>,
    /// Reference family for FINE mode.
    #[arg(long, global = true)]
    pub baseline: Option<String>,
    /// Dataset whose cells feed the regression.
    #[arg(long, global = true)]
    pub dataset: Option<String>,
    /// Correlation estimator: SPEARMAN or PEARSON.
    #[arg(long, global = true)]
    pub kind: Option<CorrelationKind>,
    /// |ΔH| at or below this is INDIFFERENT.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// |d| below this counts as zero.
    #[arg(long, global = true)]
    pub zero_tolerance: Option<f64>,
    /// Two-column word-pair TSV (synth only).
    #[arg(long, global = true)]
    pub pairs: Option<PathBuf>,
    /// CONSISTENT or PERTURBED (synth only).
    #[arg(long, global = true)]
    pub synth_mode: Option<SynthMode>,
    /// Log-prob field to perturb.
    #[arg(long, global = true)]
    pub field: Option<LogProbField>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub bias: Option<f64>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Oracle context half-width n (a (2n+1)-gram window).
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Add-α smoothing of the oracle counts.
    #[arg(long, global = true)]
    pub smoothing: Option<f64>,
}

impl Flags {
    fn as_config(&self) -> ConfigFile {
        ConfigFile {
            config_version: None,
            record_paths: (!self.records.is_empty()).then(|| self.records.clone()),
            models_path: self.models.clone(),
            report_path: self.report.clone(),
            alpha: self.alpha,
            correlation_kind: self.kind,
            regression_mode: self.mode,
            baseline_family: self.baseline.clone(),
            dataset: self.dataset.clone(),
            output_dir: self.out.clone(),
            seed: self.seed,
            tolerance: self.tolerance,
            zero_tolerance: self.zero_tolerance,
            pairs_path: self.pairs.clone(),
            synth_mode: self.synth_mode,
            target_field: self.field,
            bias: self.bias,
            sigma: self.sigma,
            ngram_order: self.order,
            smoothing: self.smoothing,
        }
    }

    pub fn resolve(&self, env_out_dir: Option<PathBuf>) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => ConfigFile::load(path).map_err(CliError::usage)?,
            None => ConfigFile::default(),
        };
        RunConfig::resolve(base.overlay(self.as_config()), env_out_dir).map_err(CliError::usage)
    }
}

pub fn execute(
    command: &Command,
    config: &RunConfig,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    match command {
        Command::Test => cmd_test(config, stdout, stderr),
        Command::Regress => cmd_regress(config, stdout, stderr),
        Command::Entropy => cmd_entropy(config, stdout, stderr),
        Command::Ranks => cmd_ranks(config, stdout, stderr),
        Command::Synth => cmd_synth(config, stdout, stderr),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. `env_out_dir` stands in for `CONTESTS_OUT_DIR`.
pub fn run<I, T>(
    args: I,
    env_out_dir: Option<PathBuf>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let outcome = cli
        .flags
        .resolve(env_out_dir)
        .and_then(|config| execute(&cli.command, &config, stdout, stderr));
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}
