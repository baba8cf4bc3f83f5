use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{CliError, RunConfig, SynthMode};
use crate::analysis::export::{
    boxplot_rows, write_boxplot_csv, write_comprehension_csv, write_entropy_csv, write_orders_jsonl,
    write_regression_csv, write_report_csv, write_report_json,
};
use crate::analysis::{
    group_by_cell, group_by_model, order_recommendations, run_comprehension_summary, run_consistency_tests,
    run_entropy_correlations, run_variance_regression, AnalysisError, TestReport,
};
use crate::oracle::{
    build_synthetic_sentences, fit_ngram, perturb_records, read_word_pairs, EmitIds, OracleError,
    PerturbationSpec,
};
use crate::records::{
    check_records_against_models, parse_records, read_models, serialize_records, write_datasets, write_models,
    DatasetKind, DatasetMeta, ModelMeta, PairScoreRecord, RecordError,
};
use crate::stats::StatsError;

pub const SYNTH_DATASET_ID: &str = "synthetic-pairs";

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))
}

fn record_error(path: &Path, e: &RecordError) -> CliError {
    let detail = match e {
        RecordError::MalformedLine { message, .. } => format!("malformed line: {message}"),
        RecordError::SchemaViolation { field, message, .. } => {
            format!("schema violation in `{field}`: {message}")
        }
        RecordError::Io { message, .. } => format!("read error: {message}"),
    };
    CliError::input(format!("{}:{}: {detail}", path.display(), e.line()))
}

fn load_records(config: &RunConfig) -> Result<Vec<PairScoreRecord>, CliError> {
    if config.record_paths.is_empty() {
        return Err(CliError::usage("no record files given (--records)"));
    }
    let mut records = Vec::new();
    for path in &config.record_paths {
        for item in parse_records(open(path)?) {
            records.push(item.map_err(|e| record_error(path, &e))?);
        }
    }
    if records.is_empty() {
        return Err(CliError::empty("record files contain no records"));
    }
    Ok(records)
}

fn load_models(path: &Path) -> Result<Vec<ModelMeta>, CliError> {
    read_models(open(path)?).map_err(|e| record_error(path, &e))
}

fn check_models(records: &[PairScoreRecord], models: &[ModelMeta], path: &Path) -> Result<(), CliError> {
    check_records_against_models(records, models)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn analysis_error(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::NoCells | AnalysisError::EmptyCell { .. } => CliError::empty(e.to_string()),
        AnalysisError::InvalidAlpha(_)
        | AnalysisError::AmbiguousDataset(_)
        | AnalysisError::UnknownDataset(_) => CliError::usage(e.to_string()),
        AnalysisError::UnknownModel(_) => CliError::input(e.to_string()),
        AnalysisError::NoVariance(_) => CliError::infeasible(e.to_string()),
        AnalysisError::Stats(s) => match s {
            StatsError::UnknownFamily(_) => CliError::usage(s.to_string()),
            StatsError::EmptyInput => CliError::empty(s.to_string()),
            StatsError::DuplicateModel(_) | StatsError::NonFiniteInput => CliError::input(s.to_string()),
            _ => CliError::infeasible(s.to_string()),
        },
    }
}

fn oracle_error(pairs_path: &Path, e: OracleError) -> CliError {
    match e {
        OracleError::MalformedTsv { line } => CliError::input(format!(
            "{}:{line}: expected two tab-separated columns",
            pairs_path.display()
        )),
        OracleError::EmptyPair(k) => CliError::input(format!(
            "{}:{}: empty word",
            pairs_path.display(),
            k + 1
        )),
        OracleError::Io(msg) => CliError::usage(format!("{}: {msg}", pairs_path.display())),
        other => CliError::usage(other.to_string()),
    }
}

/// Creates `dir/name` and hands a buffered writer to `body`.
fn write_output<F>(dir: &Path, name: &str, body: F) -> Result<PathBuf, CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let path = dir.join(name);
    let fail = |e: io::Error| CliError::usage(format!("cannot write {}: {e}", path.display()));
    fs::create_dir_all(dir).map_err(fail)?;
    let mut w = BufWriter::new(File::create(&path).map_err(fail)?);
    body(&mut w).map_err(fail)?;
    w.flush().map_err(fail)?;
    Ok(path)
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) {
    let _ = out.write_fmt(text);
}

fn build_report(config: &RunConfig, records: &[PairScoreRecord]) -> Result<TestReport, CliError> {
    let cells = group_by_cell(records);
    run_consistency_tests(&cells, config.alpha, config.zero_tolerance).map_err(analysis_error)
}

pub fn cmd_test(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let records = load_records(config)?;
    if let Some(path) = &config.models_path {
        check_models(&records, &load_models(path)?, path)?;
    }
    let cells = group_by_cell(&records);
    let report = run_consistency_tests(&cells, config.alpha, config.zero_tolerance).map_err(analysis_error)?;
    let boxes = boxplot_rows(&cells, config.zero_tolerance);

    let dir = &config.output_dir;
    write_output(dir, "report.json", |w| write_report_json(w, &report))?;
    write_output(dir, "report.csv", |w| write_report_csv(w, &report))?;
    write_output(dir, "boxplot.csv", |w| write_boxplot_csv(w, &boxes))?;

    say(
        stdout,
        format_args!(
            "{:<24} {:<20} {:>7} {:>12} {:>13} {:>11} {:>11}  decision\n",
            "model", "dataset", "n", "median_d", "method", "p_raw", "p_adj"
        ),
    );
    for c in &report.cells {
        let method = serde_json::to_value(c.wilcoxon.method)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        say(
            stdout,
            format_args!(
                "{:<24} {:<20} {:>7} {:>12.4e} {:>13} {:>11.3e} {:>11.3e}  {}\n",
                c.model_id,
                c.dataset_id,
                c.n_pairs,
                c.median_d,
                method,
                c.wilcoxon.p_value,
                c.p_adjusted,
                if c.rejected { "reject" } else { "keep" }
            ),
        );
        if c.at_boundary {
            say(
                stderr,
                format_args!(
                    "warning: ({}, {}) has p_adjusted exactly at alpha = {}; not rejected\n",
                    c.model_id, c.dataset_id, report.alpha
                ),
            );
        }
        if c.variance_d.is_none() {
            say(
                stderr,
                format_args!(
                    "warning: ({}, {}) has a single record; variance_d left empty\n",
                    c.model_id, c.dataset_id
                ),
            );
        }
    }
    let rejected = report.cells.iter().filter(|c| c.rejected).count();
    say(
        stdout,
        format_args!(
            "{rejected} of {} cells rejected at alpha = {} ({})\n",
            report.cells.len(),
            report.alpha,
            report.correction
        ),
    );
    Ok(())
}

pub fn cmd_regress(config: &RunConfig, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> Result<(), CliError> {
    let models_path = config
        .models_path
        .as_ref()
        .ok_or_else(|| CliError::usage("regression needs model metadata (--models)"))?;
    let models = load_models(models_path)?;
    let report = match &config.report_path {
        Some(path) => serde_json::from_reader::<_, TestReport>(open(path)?)
            .map_err(|e| CliError::input(format!("{}:{}: {e}", path.display(), e.line())))?,
        None => {
            let records = load_records(config)?;
            check_models(&records, &models, models_path)?;
            build_report(config, &records)?
        }
    };
    let out = run_variance_regression(
        &report,
        &models,
        config.regression_mode,
        config.baseline_family.as_deref(),
        config.dataset.as_deref(),
    )
    .map_err(analysis_error)?;
    write_output(&config.output_dir, "regression.csv", |w| write_regression_csv(w, &out.fit))?;

    say(
        stdout,
        format_args!("dataset {} ({:?} design)\n", out.dataset_id, out.mode),
    );
    say(
        stdout,
        format_args!("{:<28} {:>12} {:>12} {:>11}\n", "label", "coeff", "std_err", "p_value"),
    );
    let fit = &out.fit;
    for (i, label) in fit.design_labels.iter().enumerate() {
        say(
            stdout,
            format_args!(
                "{:<28} {:>12.4e} {:>12.4e} {:>11.3e}\n",
                label, fit.coefficients[i], fit.std_errors[i], fit.p_values[i]
            ),
        );
    }
    say(stdout, format_args!("R² = {:.6}, n = {}\n", fit.r_squared, fit.n));
    Ok(())
}

pub fn cmd_entropy(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let records = load_records(config)?;
    if let Some(path) = &config.models_path {
        check_models(&records, &load_models(path)?, path)?;
    }
    let cells = group_by_cell(&records);
    let table =
        run_entropy_correlations(&cells, config.correlation_kind, config.zero_tolerance).map_err(analysis_error)?;
    let orders = order_recommendations(&records, config.tolerance);

    write_output(&config.output_dir, "entropy.csv", |w| write_entropy_csv(w, &table))?;
    write_output(&config.output_dir, "orders.jsonl", |w| write_orders_jsonl(w, &orders))?;

    say(
        stdout,
        format_args!(
            "{:<24} {:<20} {:>7} {:>9} {:>9} {:>9} {:>9}  ({})\n",
            "model",
            "dataset",
            "n",
            "d~H_i",
            "d~H_i+1|i",
            "-d~H_i+1",
            "-d~H_i|i+1",
            table.kind.as_str()
        ),
    );
    for c in &table.cells {
        if let Some(reason) = &c.skipped {
            say(
                stdout,
                format_args!("{:<24} {:<20} {:>7}  skipped\n", c.model_id, c.dataset_id, c.n_pairs),
            );
            say(
                stderr,
                format_args!("warning: ({}, {}) skipped: {reason}\n", c.model_id, c.dataset_id),
            );
            continue;
        }
        let cols = [
            c.corr_d_h_i,
            c.corr_d_h_ip1_given_i,
            c.corr_neg_d_h_ip1,
            c.corr_neg_d_h_i_given_ip1,
        ]
        .map(|v| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}")));
        say(
            stdout,
            format_args!(
                "{:<24} {:<20} {:>7} {:>9} {:>9} {:>9} {:>9}\n",
                c.model_id, c.dataset_id, c.n_pairs, cols[0], cols[1], cols[2], cols[3]
            ),
        );
        if !c.constant_entropies.is_empty() {
            say(
                stderr,
                format_args!(
                    "warning: ({}, {}) constant entropy columns left empty: {}\n",
                    c.model_id,
                    c.dataset_id,
                    c.constant_entropies.join(", ")
                ),
            );
        }
    }
    Ok(())
}

pub fn cmd_ranks(config: &RunConfig, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> Result<(), CliError> {
    let records = load_records(config)?;
    if let Some(path) = &config.models_path {
        check_models(&records, &load_models(path)?, path)?;
    }
    let summary = run_comprehension_summary(&group_by_model(&records));
    write_output(&config.output_dir, "comprehension.csv", |w| write_comprehension_csv(w, &summary))?;

    say(
        stdout,
        format_args!(
            "{:<24} {:>7} {:>18} {:>18} {:>24}\n",
            "model", "n", "rank1 q1/med/q3", "rank2 q1/med/q3", "P(EOS) q1/med/q3"
        ),
    );
    for m in &summary.models {
        let eos = match m.eos_prob {
            Some(q) => format!("{:.3}/{:.3}/{:.3}", q.q1, q.median, q.q3),
            None => "-".into(),
        };
        say(
            stdout,
            format_args!(
                "{:<24} {:>7} {:>18} {:>18} {:>24}\n",
                m.model_id,
                m.n_records,
                format!("{}/{}/{}", m.rank1.q1, m.rank1.median, m.rank1.q3),
                format!("{}/{}/{}", m.rank2.q1, m.rank2.median, m.rank2.q3),
                eos
            ),
        );
    }
    Ok(())
}

pub fn cmd_synth(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let pairs_path = config
        .pairs_path
        .as_ref()
        .ok_or_else(|| CliError::usage("synth needs a word-pair file (--pairs)"))?;
    let pairs = read_word_pairs(open(pairs_path)?).map_err(|e| oracle_error(pairs_path, e))?;
    if pairs.is_empty() {
        return Err(CliError::empty(format!("{} holds no word pairs", pairs_path.display())));
    }
    let sentences = build_synthetic_sentences(&pairs).map_err(|e| oracle_error(pairs_path, e))?;
    let corpus: Vec<Vec<String>> = sentences.iter().map(|s| s.tokens.clone()).collect();
    let oracle =
        fit_ngram(&corpus, config.ngram_order, config.smoothing).map_err(|e| oracle_error(pairs_path, e))?;

    let model_id = match config.synth_mode {
        SynthMode::Consistent => "ngram-oracle",
        SynthMode::Perturbed => "ngram-oracle-perturbed",
    };
    let ids = EmitIds {
        dataset_id: SYNTH_DATASET_ID.into(),
        model_id: model_id.into(),
        record_prefix: SYNTH_DATASET_ID.into(),
    };
    let positions: Vec<(&[String], usize)> = sentences
        .iter()
        .map(|s| (s.tokens.as_slice(), s.mask_positions.0))
        .collect();
    let mut records = oracle
        .emit_consistent_records(&positions, &ids)
        .map_err(|e| oracle_error(pairs_path, e))?;

    if config.synth_mode == SynthMode::Perturbed {
        let spec = PerturbationSpec {
            target_field: config.target_field,
            bias: config.bias,
            noise_sigma: config.sigma,
            seed: config.seed,
        };
        let perturbed = perturb_records(&records, &spec).map_err(|e| oracle_error(pairs_path, e))?;
        if perturbed.clamped > 0 {
            say(
                stderr,
                format_args!(
                    "warning: {} of {} perturbed values exceeded 0 and were clamped\n",
                    perturbed.clamped,
                    records.len()
                ),
            );
        }
        records = perturbed.records;
    }

    let model = oracle.model_meta(model_id);
    let dataset = DatasetMeta {
        dataset_id: SYNTH_DATASET_ID.into(),
        kind: DatasetKind::Synthetic,
        description: format!(
            "template \"<w1> <w2> {}\" over {}",
            crate::oracle::TEMPLATE_SUFFIX.join(" "),
            pairs_path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
        ),
        record_count: records.len() as u64,
    };
    let dir = &config.output_dir;
    write_output(dir, "records.jsonl", |w| serialize_records(w, &records))?;
    write_output(dir, "models.jsonl", |w| write_models(w, &[model]))?;
    write_output(dir, "datasets.jsonl", |w| write_datasets(w, &[dataset]))?;
    say(
        stdout,
        format_args!(
            "wrote {} {:?} records for {} to {}\n",
            records.len(),
            config.synth_mode,
            model_id,
            dir.display()
        ),
    );
    Ok(())
}
