//! Run configuration: a flat TOML document whose keys mirror the command-line
//! flags. Flags win over the file, the file wins over `CONTESTS_OUT_DIR`
//! (output directory only), and that wins over built-in defaults.
//!
//! ```toml
//! config_version = 1
//! record_paths = ["scores/bert.jsonl", "scores/llama.jsonl"]
//! models_path = "scores/models.jsonl"
//! alpha = 0.05
//! correlation_kind = "SPEARMAN"
//! regression_mode = "COARSE"
//! output_dir = "out"
//! seed = 0
//! ```
//!
//! Relative paths in the file are resolved against the file's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analysis::DEFAULT_ZERO_TOLERANCE;
use crate::records::LogProbField;
use crate::stats::{CorrelationKind, RegressionMode, DEFAULT_ALPHA};

pub const CONFIG_VERSION: u32 = 1;
pub const OUT_DIR_ENV: &str = "CONTESTS_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SynthMode {
    #[default]
    Consistent,
    Perturbed,
}

impl std::str::FromStr for SynthMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "CONSISTENT" => Ok(SynthMode::Consistent),
            "PERTURBED" => Ok(SynthMode::Perturbed),
            _ => Err(format!("unknown synth mode `{s}` (CONSISTENT or PERTURBED)")),
        }
    }
}

/// Contents of a config file. Every key is optional except `config_version`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub config_version: Option<u32>,
    pub record_paths: Option<Vec<PathBuf>>,
    pub models_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub correlation_kind: Option<CorrelationKind>,
    pub regression_mode: Option<RegressionMode>,
    pub baseline_family: Option<String>,
    pub dataset: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub zero_tolerance: Option<f64>,
    pub pairs_path: Option<PathBuf>,
    pub synth_mode: Option<SynthMode>,
    pub target_field: Option<LogProbField>,
    pub bias: Option<f64>,
    pub sigma: Option<f64>,
    pub ngram_order: Option<usize>,
    pub smoothing: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile, String> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| e.to_string())?;
        match cfg.config_version {
            Some(CONFIG_VERSION) => Ok(cfg),
            Some(v) => Err(format!(
                "unsupported config_version {v} (this build reads {CONFIG_VERSION})"
            )),
            None => Err("missing config_version".into()),
        }
    }

    pub fn load(path: &Path) -> Result<ConfigFile, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg = ConfigFile::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.record_paths.iter_mut().flatten().for_each(rebase);
        cfg.models_path.iter_mut().for_each(rebase);
        cfg.report_path.iter_mut().for_each(rebase);
        cfg.output_dir.iter_mut().for_each(rebase);
        cfg.pairs_path.iter_mut().for_each(rebase);
        Ok(cfg)
    }

    /// Overlays `top` onto `self`; keys set in `top` win.
    pub fn overlay(self, top: ConfigFile) -> ConfigFile {
        macro_rules! pick {
            ($($f:ident),*) => {
                ConfigFile { $($f: top.$f.or(self.$f)),* }
            };
        }
        pick!(
            config_version,
            record_paths,
            models_path,
            report_path,
            alpha,
            correlation_kind,
            regression_mode,
            baseline_family,
            dataset,
            output_dir,
            seed,
            tolerance,
            zero_tolerance,
            pairs_path,
            synth_mode,
            target_field,
            bias,
            sigma,
            ngram_order,
            smoothing
        )
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub record_paths: Vec<PathBuf>,
    pub models_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    pub alpha: f64,
    pub correlation_kind: CorrelationKind,
    pub regression_mode: RegressionMode,
    pub baseline_family: Option<String>,
    pub dataset: Option<String>,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Half-width of the INDIFFERENT band for ΔH.
    pub tolerance: f64,
    pub zero_tolerance: f64,
    pub pairs_path: Option<PathBuf>,
    pub synth_mode: SynthMode,
    pub target_field: LogProbField,
    pub bias: f64,
    pub sigma: f64,
    pub ngram_order: usize,
    pub smoothing: f64,
}

impl RunConfig {
    /// Applies defaults and validates. `env_out_dir` is the value of
    /// `CONTESTS_OUT_DIR`, if set.
    pub fn resolve(merged: ConfigFile, env_out_dir: Option<PathBuf>) -> Result<RunConfig, String> {
        let cfg = RunConfig {
            record_paths: merged.record_paths.unwrap_or_default(),
            models_path: merged.models_path,
            report_path: merged.report_path,
            alpha: merged.alpha.unwrap_or(DEFAULT_ALPHA),
            correlation_kind: merged.correlation_kind.unwrap_or_default(),
            regression_mode: merged.regression_mode.unwrap_or_default(),
            baseline_family: merged.baseline_family,
            dataset: merged.dataset,
            output_dir: merged
                .output_dir
                .or(env_out_dir)
                .unwrap_or_else(|| PathBuf::from(".")),
            seed: merged.seed.unwrap_or(0),
            tolerance: merged.tolerance.unwrap_or(0.0),
            zero_tolerance: merged.zero_tolerance.unwrap_or(DEFAULT_ZERO_TOLERANCE),
            pairs_path: merged.pairs_path,
            synth_mode: merged.synth_mode.unwrap_or_default(),
            target_field: merged.target_field.unwrap_or(LogProbField::Ip1GivenI),
            bias: merged.bias.unwrap_or(0.0),
            sigma: merged.sigma.unwrap_or(0.0),
            ngram_order: merged.ngram_order.unwrap_or(1),
            smoothing: merged.smoothing.unwrap_or(0.1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        let nonneg = |name: &str, x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(format!("{name} must be finite and >= 0, got {x}"))
            }
        };
        nonneg("tolerance", self.tolerance)?;
        nonneg("zero_tolerance", self.zero_tolerance)?;
        nonneg("sigma", self.sigma)?;
        nonneg("smoothing", self.smoothing)?;
        if !self.bias.is_finite() {
            return Err(format!("bias must be finite, got {}", self.bias));
        }
        if self.ngram_order == 0 {
            return Err("ngram_order must be >= 1".into());
        }
        Ok(())
    }
}
