//! Maximum-likelihood (2n+1)-gram oracle over adjacent token pairs.
//!
//! A window covers `2n + 1` tokens with the masked pair at offsets `n` and
//! `n + 1`; the remaining `2n - 1` tokens form the context. For each context
//! the table holds joint counts of the pair, smoothed as
//!
//! ```text
//! P(a, b | ctx) = (c(a, b) + α) / (N + α |V|²)
//! ```
//!
//! Two-mask conditionals are marginals of this joint and one-mask
//! conditionals are its slices, so both factorization orders reproduce
//! `ln P(a, b | ctx)`.

use std::collections::{BTreeSet, HashMap};

use super::OracleError;
use crate::records::{ModelMeta, ModelType, PairScoreRecord};

/// Boundary marker. Never part of the vocabulary and never ranked.
pub const PAD_TOKEN: &str = "<pad>";

const PAD_ID: u32 = u32::MAX;

#[derive(Debug, Default, Clone)]
struct PairTable {
    counts: HashMap<(u32, u32), u64>,
    /// b -> count for each a
    rows: HashMap<u32, Vec<(u32, u64)>>,
    /// a -> count for each b
    cols: HashMap<u32, Vec<(u32, u64)>>,
    row_totals: HashMap<u32, u64>,
    col_totals: HashMap<u32, u64>,
    total: u64,
}

impl PairTable {
    fn add(&mut self, a: u32, b: u32) {
        *self.counts.entry((a, b)).or_insert(0) += 1;
        *self.row_totals.entry(a).or_insert(0) += 1;
        *self.col_totals.entry(b).or_insert(0) += 1;
        self.total += 1;
    }

    fn finish(&mut self) {
        let mut keys: Vec<_> = self.counts.iter().map(|(k, v)| (*k, *v)).collect();
        keys.sort_unstable();
        for ((a, b), c) in keys {
            self.rows.entry(a).or_default().push((b, c));
            self.cols.entry(b).or_default().push((a, c));
        }
    }

    fn count(&self, a: u32, b: u32) -> u64 {
        self.counts.get(&(a, b)).copied().unwrap_or(0)
    }
}

/// Identifiers stamped onto emitted records.
#[derive(Debug, Clone)]
pub struct EmitIds {
    pub dataset_id: String,
    pub model_id: String,
    /// Record ids are `{record_prefix}-{k:06}` for the k-th position.
    pub record_prefix: String,
}

/// A `((w_i, w_{i+1}), count)` entry from [`NgramOracle::context_counts`].
pub type PairCount = ((String, String), u64);

#[derive(Debug, Clone)]
pub struct NgramOracle {
    order: usize,
    alpha: f64,
    padded: bool,
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    tables: HashMap<Vec<u32>, PairTable>,
}

/// Fits a padded oracle: every adjacent pair of every sequence contributes
/// one window.
pub fn fit_ngram<S: AsRef<str>>(
    corpus: &[Vec<S>],
    order: usize,
    alpha: f64,
) -> Result<NgramOracle, OracleError> {
    NgramOracle::fit(corpus, order, alpha, true)
}

impl NgramOracle {
    /// With `padded == false` only pairs with `n` real tokens on both sides
    /// are counted, so sequences shorter than `2n + 1` contribute nothing.
    pub fn fit<S: AsRef<str>>(
        corpus: &[Vec<S>],
        order: usize,
        alpha: f64,
        padded: bool,
    ) -> Result<NgramOracle, OracleError> {
        if corpus.is_empty() {
            return Err(OracleError::EmptyCorpus);
        }
        if order == 0 {
            return Err(OracleError::InvalidOrder(order));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(OracleError::InvalidAlpha(alpha));
        }

        let mut words = BTreeSet::new();
        for seq in corpus {
            for tok in seq {
                let tok = tok.as_ref();
                if tok == PAD_TOKEN {
                    return Err(OracleError::ReservedToken(tok.to_string()));
                }
                words.insert(tok.to_string());
            }
        }
        let vocab: Vec<String> = words.into_iter().collect();
        let index: HashMap<String, u32> = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();

        let mut oracle = NgramOracle {
            order,
            alpha,
            padded,
            vocab,
            index,
            tables: HashMap::new(),
        };
        for seq in corpus {
            let ids: Vec<u32> = seq.iter().map(|t| oracle.index[t.as_ref()]).collect();
            for i in 0..ids.len().saturating_sub(1) {
                if let Some(window) = oracle.window(&ids, i) {
                    let key = oracle.context_key(&window);
                    oracle
                        .tables
                        .entry(key)
                        .or_default()
                        .add(window[order], window[order + 1]);
                }
            }
        }
        if oracle.tables.is_empty() {
            return Err(OracleError::EmptyCounts);
        }
        for table in oracle.tables.values_mut() {
            table.finish();
        }
        Ok(oracle)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Sorted vocabulary, padding excluded.
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// Number of distinct stored (context, pair) counts.
    pub fn stored_counts(&self) -> usize {
        self.tables.values().map(|t| t.counts.len()).sum()
    }

    /// Metadata describing this oracle as a scoring model.
    pub fn model_meta(&self, model_id: &str) -> ModelMeta {
        ModelMeta {
            model_id: model_id.to_string(),
            family: "ngram-oracle".into(),
            model_type: ModelType::Mlm,
            // the stored counts are the model's parameters
            params_billions: self.stored_counts() as f64 * 1e-9,
            train_gb: 0.0,
            chat_variant: None,
        }
    }

    /// The `2n + 1` window for the pair at `(i, i + 1)`, padded when enabled.
    fn window(&self, ids: &[u32], i: usize) -> Option<Vec<u32>> {
        let n = self.order;
        if i + 1 >= ids.len() {
            return None;
        }
        let get = |pos: isize| -> Option<u32> {
            if pos >= 0 && (pos as usize) < ids.len() {
                Some(ids[pos as usize])
            } else if self.padded {
                Some(PAD_ID)
            } else {
                None
            }
        };
        let start = i as isize - n as isize;
        (0..(2 * n + 1) as isize).map(|o| get(start + o)).collect()
    }

    fn context_key(&self, window: &[u32]) -> Vec<u32> {
        let n = self.order;
        window
            .iter()
            .enumerate()
            .filter(|(o, _)| *o != n && *o != n + 1)
            .map(|(_, id)| *id)
            .collect()
    }

    fn ids_of<S: AsRef<str>>(&self, seq: &[S]) -> Result<Vec<u32>, OracleError> {
        seq.iter()
            .map(|t| {
                self.index
                    .get(t.as_ref())
                    .copied()
                    .ok_or_else(|| OracleError::UnknownToken(t.as_ref().to_string()))
            })
            .collect()
    }

    /// Every pair position of `corpus` that has a full window.
    pub fn positions<S: AsRef<str>>(&self, corpus: &[Vec<S>]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (s, seq) in corpus.iter().enumerate() {
            for i in 0..seq.len().saturating_sub(1) {
                let fits = self.padded || (i >= self.order && i + self.order < seq.len());
                if fits {
                    out.push((s, i));
                }
            }
        }
        out
    }

    /// Raw joint counts stored for the context of `(seq, i)`, as
    /// `((w_i, w_{i+1}), count)` sorted by vocabulary order.
    pub fn context_counts<S: AsRef<str>>(
        &self,
        seq: &[S],
        i: usize,
    ) -> Result<Vec<PairCount>, OracleError> {
        let ids = self.ids_of(seq)?;
        let window = self.window(&ids, i).ok_or(OracleError::ContextTooShort {
            index: i,
            len: seq.len(),
        })?;
        let key = self.context_key(&window);
        let mut out: Vec<_> = self
            .tables
            .get(&key)
            .map(|t| {
                t.counts
                    .iter()
                    .map(|(&(a, b), &c)| ((a, b), c))
                    .collect::<Vec<_>>()
            })
            .unwrap_or_default();
        out.sort_unstable();
        Ok(out
            .into_iter()
            .map(|((a, b), c)| {
                (
                    (self.vocab[a as usize].clone(), self.vocab[b as usize].clone()),
                    c,
                )
            })
            .collect())
    }

    /// Scores the pair `(seq[i], seq[i + 1])`.
    pub fn score_pair<S: AsRef<str>>(
        &self,
        seq: &[S],
        i: usize,
        ids: &EmitIds,
        record_id: String,
    ) -> Result<PairScoreRecord, OracleError> {
        let tok = self.ids_of(seq)?;
        let window = self.window(&tok, i).ok_or(OracleError::ContextTooShort {
            index: i,
            len: seq.len(),
        })?;
        let key = self.context_key(&window);
        let empty = PairTable::default();
        let table = match self.tables.get(&key) {
            Some(t) => t,
            None if self.alpha > 0.0 => &empty,
            None => return Err(OracleError::EmptyCounts),
        };
        let (a, b) = (tok[i], tok[i + 1]);
        let alpha = self.alpha;
        let v = self.vocab.len() as f64;

        let c_ab = table.count(a, b) as f64 + alpha;
        if c_ab == 0.0 {
            return Err(OracleError::UnseenPair(
                seq[i].as_ref().to_string(),
                seq[i + 1].as_ref().to_string(),
            ));
        }
        let total = table.total as f64 + alpha * v * v;
        let row_total = |x: u32| table.row_totals.get(&x).copied().unwrap_or(0) as f64 + alpha * v;
        let col_total = |x: u32| table.col_totals.get(&x).copied().unwrap_or(0) as f64 + alpha * v;
        let r_a = row_total(a);
        let k_b = col_total(b);

        let log_ratio = |num: f64, den: f64| (num.ln() - den.ln()).min(0.0);

        // Dense distributions over the vocabulary.
        let vocab_len = self.vocab.len();
        let marginal_i: Vec<f64> = (0..vocab_len as u32).map(|x| row_total(x) / total).collect();
        let marginal_ip1: Vec<f64> = (0..vocab_len as u32).map(|x| col_total(x) / total).collect();
        let mut cond_ip1 = vec![alpha / r_a; vocab_len];
        for &(x, c) in table.rows.get(&a).map(Vec::as_slice).unwrap_or(&[]) {
            cond_ip1[x as usize] = (c as f64 + alpha) / r_a;
        }
        let mut cond_i = vec![alpha / k_b; vocab_len];
        for &(x, c) in table.cols.get(&b).map(Vec::as_slice).unwrap_or(&[]) {
            cond_i[x as usize] = (c as f64 + alpha) / k_b;
        }

        Ok(PairScoreRecord {
            record_id,
            dataset_id: ids.dataset_id.clone(),
            model_id: ids.model_id.clone(),
            position: i as u64,
            token_i: seq[i].as_ref().to_string(),
            token_ip1: seq[i + 1].as_ref().to_string(),
            lp_i_both_masked: log_ratio(r_a, total),
            lp_ip1_given_i: log_ratio(c_ab, r_a),
            lp_ip1_both_masked: log_ratio(k_b, total),
            lp_i_given_ip1: log_ratio(c_ab, k_b),
            h_i: entropy(&marginal_i),
            h_ip1_given_i: entropy(&cond_ip1),
            h_ip1: entropy(&marginal_ip1),
            h_i_given_ip1: entropy(&cond_i),
            rank_i_both_masked: rank_of(&marginal_i, a as usize),
            rank_ip1_given_i: rank_of(&cond_ip1, b as usize),
            eos_lp: None,
        })
    }

    /// Scores every `(sequence, i)` position. Record ids follow input order.
    pub fn emit_consistent_records<S: AsRef<str>>(
        &self,
        positions: &[(&[S], usize)],
        ids: &EmitIds,
    ) -> Result<Vec<PairScoreRecord>, OracleError> {
        positions
            .iter()
            .enumerate()
            .map(|(k, (seq, i))| {
                self.score_pair(seq, *i, ids, format!("{}-{:06}", ids.record_prefix, k))
            })
            .collect()
    }
}

fn entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.ln())
        .sum::<f64>()
        .max(0.0)
}

/// 1-based rank of `target`; equal scores are ordered by vocabulary index.
fn rank_of(p: &[f64], target: usize) -> u64 {
    let pt = p[target];
    let ahead = p
        .iter()
        .enumerate()
        .filter(|&(j, &x)| x > pt || (x == pt && j < target))
        .count();
    ahead as u64 + 1
}
