//! Score records, model and dataset metadata, and their JSONL interchange
//! format.
//!
//! Every line of a record file is one JSON object describing one adjacent
//! token pair as scored by one model. Full vocabulary distributions are never
//! stored: a scorer reduces them to four conditional log-probabilities, four
//! entropies and two ranks. All logarithms are natural (nats).
//!
//! Serialization is canonical: fields appear in a fixed order and every real
//! is written with 17 significant digits, so `parse(serialize(r)) == r` holds
//! bit-for-bit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub const RECORD_ID: &str = "record_id";
pub const DATASET_ID: &str = "dataset_id";
pub const MODEL_ID: &str = "model_id";
pub const POSITION: &str = "position";
pub const TOKEN_I: &str = "token_i";
pub const TOKEN_IP1: &str = "token_ip1";
pub const LP_I_BOTH_MASKED: &str = "lp_i_both_masked";
pub const LP_IP1_GIVEN_I: &str = "lp_ip1_given_i";
pub const LP_IP1_BOTH_MASKED: &str = "lp_ip1_both_masked";
pub const LP_I_GIVEN_IP1: &str = "lp_i_given_ip1";
pub const H_I: &str = "h_i";
pub const H_IP1_GIVEN_I: &str = "h_ip1_given_i";
pub const H_IP1: &str = "h_ip1";
pub const H_I_GIVEN_IP1: &str = "h_i_given_ip1";
pub const RANK_I_BOTH_MASKED: &str = "rank_i_both_masked";
pub const RANK_IP1_GIVEN_I: &str = "rank_ip1_given_i";
pub const EOS_LP: &str = "eos_lp";

/// Canonical field order of a record line.
pub const RECORD_FIELDS: [&str; 17] = [
    RECORD_ID,
    DATASET_ID,
    MODEL_ID,
    POSITION,
    TOKEN_I,
    TOKEN_IP1,
    LP_I_BOTH_MASKED,
    LP_IP1_GIVEN_I,
    LP_IP1_BOTH_MASKED,
    LP_I_GIVEN_IP1,
    H_I,
    H_IP1_GIVEN_I,
    H_IP1,
    H_I_GIVEN_IP1,
    RANK_I_BOTH_MASKED,
    RANK_IP1_GIVEN_I,
    EOS_LP,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordError {
    #[error("line {line}: malformed line: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: schema violation in `{field}`: {message}")]
    SchemaViolation {
        line: usize,
        field: String,
        message: String,
    },
    #[error("line {line}: read error: {message}")]
    Io { line: usize, message: String },
}

impl RecordError {
    pub fn line(&self) -> usize {
        match self {
            RecordError::MalformedLine { line, .. }
            | RecordError::SchemaViolation { line, .. }
            | RecordError::Io { line, .. } => *line,
        }
    }
}

/// Model architecture class. Maps to the regression indicator: MLM is 0,
/// autoregressive is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModelType {
    Mlm,
    Autoregressive,
}

impl ModelType {
    pub fn indicator(self) -> f64 {
        match self {
            ModelType::Mlm => 0.0,
            ModelType::Autoregressive => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMeta {
    pub model_id: String,
    pub family: String,
    pub model_type: ModelType,
    /// Parameter count in billions.
    pub params_billions: f64,
    /// Training-data volume in gigabytes.
    pub train_gb: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chat_variant: Option<bool>,
}

impl ModelMeta {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.model_id.is_empty() {
            return Err(("model_id", "must be nonempty".into()));
        }
        if !(self.params_billions.is_finite() && self.params_billions > 0.0) {
            return Err((
                "params_billions",
                format!("must be finite and > 0, got {}", self.params_billions),
            ));
        }
        if !(self.train_gb.is_finite() && self.train_gb >= 0.0) {
            return Err((
                "train_gb",
                format!("must be finite and >= 0, got {}", self.train_gb),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DatasetKind {
    Natural,
    Synthetic,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub dataset_id: String,
    pub kind: DatasetKind,
    pub description: String,
    pub record_count: u64,
}

/// The four conditional log-probabilities stored on a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogProbField {
    #[serde(rename = "lp_i_both_masked")]
    IBothMasked,
    #[serde(rename = "lp_ip1_given_i")]
    Ip1GivenI,
    #[serde(rename = "lp_ip1_both_masked")]
    Ip1BothMasked,
    #[serde(rename = "lp_i_given_ip1")]
    IGivenIp1,
}

impl LogProbField {
    pub const ALL: [LogProbField; 4] = [
        LogProbField::IBothMasked,
        LogProbField::Ip1GivenI,
        LogProbField::Ip1BothMasked,
        LogProbField::IGivenIp1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LogProbField::IBothMasked => LP_I_BOTH_MASKED,
            LogProbField::Ip1GivenI => LP_IP1_GIVEN_I,
            LogProbField::Ip1BothMasked => LP_IP1_BOTH_MASKED,
            LogProbField::IGivenIp1 => LP_I_GIVEN_IP1,
        }
    }
}

impl std::str::FromStr for LogProbField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LogProbField::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown log-prob field `{s}`"))
    }
}

/// All scalar quantities for one adjacent token pair `(w_i, w_{i+1})` under
/// one model.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScoreRecord {
    pub record_id: String,
    pub dataset_id: String,
    pub model_id: String,
    pub position: u64,
    pub token_i: String,
    pub token_ip1: String,
    /// ln P(x_i | x without i, i+1)
    pub lp_i_both_masked: f64,
    /// ln P(x_{i+1} | x without i+1)
    pub lp_ip1_given_i: f64,
    /// ln P(x_{i+1} | x without i, i+1)
    pub lp_ip1_both_masked: f64,
    /// ln P(x_i | x without i)
    pub lp_i_given_ip1: f64,
    pub h_i: f64,
    pub h_ip1_given_i: f64,
    pub h_ip1: f64,
    pub h_i_given_ip1: f64,
    pub rank_i_both_masked: u64,
    pub rank_ip1_given_i: u64,
    /// ln P(EOS) right after the single predicted token. Autoregressive only.
    pub eos_lp: Option<f64>,
}

impl PairScoreRecord {
    pub fn log_prob(&self, field: LogProbField) -> f64 {
        match field {
            LogProbField::IBothMasked => self.lp_i_both_masked,
            LogProbField::Ip1GivenI => self.lp_ip1_given_i,
            LogProbField::Ip1BothMasked => self.lp_ip1_both_masked,
            LogProbField::IGivenIp1 => self.lp_i_given_ip1,
        }
    }

    pub fn log_prob_mut(&mut self, field: LogProbField) -> &mut f64 {
        match field {
            LogProbField::IBothMasked => &mut self.lp_i_both_masked,
            LogProbField::Ip1GivenI => &mut self.lp_ip1_given_i,
            LogProbField::Ip1BothMasked => &mut self.lp_ip1_both_masked,
            LogProbField::IGivenIp1 => &mut self.lp_i_given_ip1,
        }
    }

    /// Checks every field invariant, returning the first offending field.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        for (name, v) in [
            (LP_I_BOTH_MASKED, self.lp_i_both_masked),
            (LP_IP1_GIVEN_I, self.lp_ip1_given_i),
            (LP_IP1_BOTH_MASKED, self.lp_ip1_both_masked),
            (LP_I_GIVEN_IP1, self.lp_i_given_ip1),
        ] {
            check_log_prob(name, v)?;
        }
        for (name, v) in [
            (H_I, self.h_i),
            (H_IP1_GIVEN_I, self.h_ip1_given_i),
            (H_IP1, self.h_ip1),
            (H_I_GIVEN_IP1, self.h_i_given_ip1),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err((name, format!("entropy must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [
            (RANK_I_BOTH_MASKED, self.rank_i_both_masked),
            (RANK_IP1_GIVEN_I, self.rank_ip1_given_i),
        ] {
            if v < 1 {
                return Err((name, "rank must be >= 1".into()));
            }
        }
        if let Some(v) = self.eos_lp {
            check_log_prob(EOS_LP, v)?;
        }
        Ok(())
    }
}

fn check_log_prob(name: &'static str, v: f64) -> Result<(), (&'static str, String)> {
    if !v.is_finite() || v > 0.0 {
        return Err((
            name,
            format!("log-probability must be finite and <= 0, got {v}"),
        ));
    }
    Ok(())
}

/// Parses one line into a validated record. `line` is 1-based and only used
/// for error reporting.
pub fn parse_record_line(text: &str, line: usize) -> Result<PairScoreRecord, RecordError> {
    let value: Value = serde_json::from_str(text).map_err(|e| RecordError::MalformedLine {
        line,
        message: e.to_string(),
    })?;
    let Value::Object(obj) = value else {
        return Err(RecordError::MalformedLine {
            line,
            message: "expected a JSON object".into(),
        });
    };
    let fields = FieldReader { obj: &obj, line };

    if let Some(unknown) = obj.keys().find(|k| !RECORD_FIELDS.contains(&k.as_str())) {
        return Err(fields.violation(unknown, "unknown field"));
    }

    let record = PairScoreRecord {
        record_id: fields.string(RECORD_ID)?,
        dataset_id: fields.string(DATASET_ID)?,
        model_id: fields.string(MODEL_ID)?,
        position: fields.uint(POSITION)?,
        token_i: fields.string(TOKEN_I)?,
        token_ip1: fields.string(TOKEN_IP1)?,
        lp_i_both_masked: fields.real(LP_I_BOTH_MASKED)?,
        lp_ip1_given_i: fields.real(LP_IP1_GIVEN_I)?,
        lp_ip1_both_masked: fields.real(LP_IP1_BOTH_MASKED)?,
        lp_i_given_ip1: fields.real(LP_I_GIVEN_IP1)?,
        h_i: fields.real(H_I)?,
        h_ip1_given_i: fields.real(H_IP1_GIVEN_I)?,
        h_ip1: fields.real(H_IP1)?,
        h_i_given_ip1: fields.real(H_I_GIVEN_IP1)?,
        rank_i_both_masked: fields.uint(RANK_I_BOTH_MASKED)?,
        rank_ip1_given_i: fields.uint(RANK_IP1_GIVEN_I)?,
        eos_lp: match obj.get(EOS_LP) {
            None => None,
            Some(_) => Some(fields.real(EOS_LP)?),
        },
    };
    record
        .validate()
        .map_err(|(field, message)| fields.violation(field, &message))?;
    Ok(record)
}

struct FieldReader<'a> {
    obj: &'a Map<String, Value>,
    line: usize,
}

impl FieldReader<'_> {
    fn violation(&self, field: &str, message: &str) -> RecordError {
        RecordError::SchemaViolation {
            line: self.line,
            field: field.to_string(),
            message: message.to_string(),
        }
    }

    fn get(&self, field: &str) -> Result<&Value, RecordError> {
        self.obj
            .get(field)
            .ok_or_else(|| self.violation(field, "missing field"))
    }

    fn string(&self, field: &str) -> Result<String, RecordError> {
        match self.get(field)? {
            Value::String(s) => Ok(s.clone()),
            _ => Err(self.violation(field, "expected a string")),
        }
    }

    fn uint(&self, field: &str) -> Result<u64, RecordError> {
        self.get(field)?
            .as_u64()
            .ok_or_else(|| self.violation(field, "expected a nonnegative integer"))
    }

    fn real(&self, field: &str) -> Result<f64, RecordError> {
        self.get(field)?
            .as_f64()
            .ok_or_else(|| self.violation(field, "expected a number"))
    }
}

/// Streaming record parser over a line-oriented reader.
///
/// Yields exactly one item per input line, in input order. An error on one
/// line does not stop the iteration.
pub struct RecordReader<R> {
    reader: R,
    line: usize,
    buf: Vec<u8>,
    done: bool,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(reader: R) -> Self {
        RecordReader {
            reader,
            line: 0,
            buf: Vec::new(),
            done: false,
        }
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<PairScoreRecord, RecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        self.buf.clear();
        self.line += 1;
        match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(0) => {
                self.done = true;
                None
            }
            Ok(_) => {
                let line = self.line;
                let mut bytes = self.buf.as_slice();
                if let Some(rest) = bytes.strip_suffix(b"\n") {
                    bytes = rest;
                }
                if let Some(rest) = bytes.strip_suffix(b"\r") {
                    bytes = rest;
                }
                Some(match std::str::from_utf8(bytes) {
                    Ok(text) => parse_record_line(text, line),
                    Err(e) => Err(RecordError::MalformedLine {
                        line,
                        message: format!("invalid UTF-8: {e}"),
                    }),
                })
            }
            Err(e) => {
                self.done = true;
                Some(Err(RecordError::Io {
                    line: self.line,
                    message: e.to_string(),
                }))
            }
        }
    }
}

/// Lazily parses a JSONL record stream.
pub fn parse_records<R: BufRead>(reader: R) -> RecordReader<R> {
    RecordReader::new(reader)
}

/// Parses a whole stream, stopping at the first offending line.
pub fn read_all_records<R: BufRead>(reader: R) -> Result<Vec<PairScoreRecord>, RecordError> {
    parse_records(reader).collect()
}

/// Formats a finite `f64` with 17 significant digits, trailing zeros
/// trimmed. Small and moderate magnitudes are positional, the rest use an
/// exponent. The output always contains a `.` or an `e`.
pub fn format_f64(x: f64) -> String {
    debug_assert!(x.is_finite());
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0" } else { "0.0" }.to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let all_digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = all_digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };

    let mut out = String::with_capacity(26);
    if negative {
        out.push('-');
    }
    if (-5..17).contains(&exp) {
        if exp >= 0 {
            let int_len = exp as usize + 1;
            if digits.len() <= int_len {
                out.push_str(digits);
                out.extend(std::iter::repeat_n('0', int_len - digits.len()));
                out.push_str(".0");
            } else {
                out.push_str(&digits[..int_len]);
                out.push('.');
                out.push_str(&digits[int_len..]);
            }
        } else {
            out.push_str("0.");
            out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
            out.push_str(digits);
        }
    } else {
        out.push_str(&digits[..1]);
        out.push('.');
        out.push_str(if digits.len() > 1 { &digits[1..] } else { "0" });
        let _ = write!(out, "e{exp}");
    }
    out
}

fn push_json_str(out: &mut String, key: &str, value: &str) {
    let _ = write!(
        out,
        "\"{key}\":{}",
        serde_json::to_string(value).expect("strings always serialize")
    );
}

/// Renders one record as a canonical JSON line, without the newline.
pub fn record_to_line(r: &PairScoreRecord) -> String {
    let mut out = String::with_capacity(512);
    out.push('{');
    push_json_str(&mut out, RECORD_ID, &r.record_id);
    out.push(',');
    push_json_str(&mut out, DATASET_ID, &r.dataset_id);
    out.push(',');
    push_json_str(&mut out, MODEL_ID, &r.model_id);
    let _ = write!(out, ",\"{POSITION}\":{}", r.position);
    out.push(',');
    push_json_str(&mut out, TOKEN_I, &r.token_i);
    out.push(',');
    push_json_str(&mut out, TOKEN_IP1, &r.token_ip1);
    for (key, v) in [
        (LP_I_BOTH_MASKED, r.lp_i_both_masked),
        (LP_IP1_GIVEN_I, r.lp_ip1_given_i),
        (LP_IP1_BOTH_MASKED, r.lp_ip1_both_masked),
        (LP_I_GIVEN_IP1, r.lp_i_given_ip1),
        (H_I, r.h_i),
        (H_IP1_GIVEN_I, r.h_ip1_given_i),
        (H_IP1, r.h_ip1),
        (H_I_GIVEN_IP1, r.h_i_given_ip1),
    ] {
        let _ = write!(out, ",\"{key}\":{}", format_f64(v));
    }
    let _ = write!(
        out,
        ",\"{RANK_I_BOTH_MASKED}\":{},\"{RANK_IP1_GIVEN_I}\":{}",
        r.rank_i_both_masked, r.rank_ip1_given_i
    );
    if let Some(v) = r.eos_lp {
        let _ = write!(out, ",\"{EOS_LP}\":{}", format_f64(v));
    }
    out.push('}');
    out
}

/// Writes records as canonical JSONL, one newline-terminated line each.
pub fn serialize_records<'a, W, I>(mut writer: W, records: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a PairScoreRecord>,
{
    for r in records {
        writer.write_all(record_to_line(r).as_bytes())?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a sidecar of `ModelMeta` or `DatasetMeta` lines.
fn read_sidecar<T, R>(reader: R, check: impl Fn(&T) -> Result<(), (&'static str, String)>) -> Result<Vec<T>, RecordError>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
{
    let mut out = Vec::new();
    for (idx, text) in reader.lines().enumerate() {
        let line = idx + 1;
        let text = text.map_err(|e| RecordError::Io {
            line,
            message: e.to_string(),
        })?;
        let value: Value = serde_json::from_str(&text).map_err(|e| RecordError::MalformedLine {
            line,
            message: e.to_string(),
        })?;
        let item: T = serde_json::from_value(value).map_err(|e| RecordError::SchemaViolation {
            line,
            field: sidecar_field_hint(&e.to_string()),
            message: e.to_string(),
        })?;
        check(&item).map_err(|(field, message)| RecordError::SchemaViolation {
            line,
            field: field.to_string(),
            message,
        })?;
        out.push(item);
    }
    Ok(out)
}

// serde reports field names in backticks, e.g. "missing field `family`".
fn sidecar_field_hint(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .unwrap_or("<object>")
        .to_string()
}

pub fn read_models<R: BufRead>(reader: R) -> Result<Vec<ModelMeta>, RecordError> {
    let models: Vec<ModelMeta> = read_sidecar(reader, ModelMeta::validate)?;
    let mut seen = BTreeSet::new();
    for (idx, m) in models.iter().enumerate() {
        if !seen.insert(m.model_id.as_str()) {
            return Err(RecordError::SchemaViolation {
                line: idx + 1,
                field: "model_id".into(),
                message: format!("duplicate model_id `{}`", m.model_id),
            });
        }
    }
    Ok(models)
}

pub fn read_datasets<R: BufRead>(reader: R) -> Result<Vec<DatasetMeta>, RecordError> {
    read_sidecar(reader, |_: &DatasetMeta| Ok(()))
}

fn write_sidecar<W: Write, T: Serialize>(mut writer: W, items: &[T]) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_models<W: Write>(writer: W, models: &[ModelMeta]) -> io::Result<()> {
    write_sidecar(writer, models)
}

pub fn write_datasets<W: Write>(writer: W, datasets: &[DatasetMeta]) -> io::Result<()> {
    write_sidecar(writer, datasets)
}

/// Number of records carrying each dataset id.
pub fn dataset_counts(records: &[PairScoreRecord]) -> BTreeMap<&str, u64> {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry(r.dataset_id.as_str()).or_insert(0) += 1;
    }
    counts
}

/// Checks `record_count` of every dataset against the bundle.
pub fn check_dataset_counts(
    datasets: &[DatasetMeta],
    records: &[PairScoreRecord],
) -> Result<(), String> {
    let counts = dataset_counts(records);
    for d in datasets {
        let actual = counts.get(d.dataset_id.as_str()).copied().unwrap_or(0);
        if actual != d.record_count {
            return Err(format!(
                "dataset `{}` declares {} records but the bundle holds {}",
                d.dataset_id, d.record_count, actual
            ));
        }
    }
    Ok(())
}

/// Checks that `eos_lp` only appears on records of autoregressive models and
/// that every record refers to a known model.
pub fn check_records_against_models(
    records: &[PairScoreRecord],
    models: &[ModelMeta],
) -> Result<(), String> {
    let by_id: BTreeMap<&str, &ModelMeta> =
        models.iter().map(|m| (m.model_id.as_str(), m)).collect();
    for r in records {
        let Some(model) = by_id.get(r.model_id.as_str()) else {
            return Err(format!(
                "record `{}` refers to unknown model `{}`",
                r.record_id, r.model_id
            ));
        };
        if r.eos_lp.is_some() && model.model_type != ModelType::Autoregressive {
            return Err(format!(
                "record `{}` carries eos_lp but model `{}` is not autoregressive",
                r.record_id, r.model_id
            ));
        }
    }
    Ok(())
}
