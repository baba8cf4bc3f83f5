//! Ground-truth score generators for validating the pipeline without a
//! neural model.
//!
//! [`NgramOracle`] derives every conditional from a single count table, so
//! the two factorization orders agree by construction. [`perturb_records`]
//! breaks that agreement in a controlled way, and
//! [`build_synthetic_sentences`] instantiates the fixed-context template used
//! for synthetic datasets.

mod ngram;
mod perturb;
mod synthetic;

use thiserror::Error;

pub use ngram::{fit_ngram, EmitIds, NgramOracle, PairCount, PAD_TOKEN};
pub use perturb::{perturb_records, Perturbed, PerturbationSpec};
pub use synthetic::{build_synthetic_sentences, read_word_pairs, SyntheticSentence, TEMPLATE_SUFFIX};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("corpus is empty")]
    EmptyCorpus,
    /// No windows to count, or an unseen context queried without smoothing.
    #[error("no counts available for the requested window")]
    EmptyCounts,
    #[error("pair ({0}, {1}) was never observed in its context and smoothing is disabled")]
    UnseenPair(String, String),
    #[error("order must be >= 1, got {0}")]
    InvalidOrder(usize),
    #[error("smoothing alpha must be finite and >= 0, got {0}")]
    InvalidAlpha(f64),
    #[error("noise sigma must be finite and >= 0, got {0}")]
    InvalidSigma(f64),
    #[error("position {index} has no full context window in a sequence of length {len}")]
    ContextTooShort { index: usize, len: usize },
    #[error("token `{0}` is not in the oracle vocabulary")]
    UnknownToken(String),
    #[error("token `{0}` is reserved")]
    ReservedToken(String),
    #[error("word pair {0} has an empty word")]
    EmptyPair(usize),
    #[error("line {line}: expected two tab-separated words")]
    MalformedTsv { line: usize },
    #[error("read error: {0}")]
    Io(String),
}
