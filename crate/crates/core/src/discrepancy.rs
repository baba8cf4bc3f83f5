//! Joint-probability estimates under the two factorization orders, their
//! log discrepancy, pointwise mutual information, and the entropy statistic
//! used to pick a decoding order.
//!
//! For a pair `(x_i, x_{i+1})` a model can estimate the joint two ways:
//!
//! ```text
//! P_{i,i+1} = P(x_i | both masked)     * P(x_{i+1} | x_i revealed)
//! P_{i+1,i} = P(x_{i+1} | both masked) * P(x_i | x_{i+1} revealed)
//! ```
//!
//! A consistent model gives the same value for both, so `d = ln P_{i,i+1} -
//! ln P_{i+1,i}` is zero. Values are taken from the record as reported; no
//! renormalization is applied.

use serde::{Deserialize, Serialize};

use crate::records::PairScoreRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecodingOrder {
    /// Decode position `i` first.
    IFirst,
    /// Decode position `i + 1` first.
    Ip1First,
    Indifferent,
}

impl DecodingOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            DecodingOrder::IFirst => "I_FIRST",
            DecodingOrder::Ip1First => "IP1_FIRST",
            DecodingOrder::Indifferent => "INDIFFERENT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyResult {
    pub record_id: String,
    pub log_p_fwd: f64,
    pub log_p_bwd: f64,
    pub d: f64,
    pub pmi_fwd: f64,
    pub pmi_bwd: f64,
    pub delta_h: f64,
    pub recommended_order: DecodingOrder,
}

/// `(ln P_{i,i+1}, ln P_{i+1,i})`.
pub fn joint_log_probs(r: &PairScoreRecord) -> (f64, f64) {
    (
        r.lp_i_both_masked + r.lp_ip1_given_i,
        r.lp_ip1_both_masked + r.lp_i_given_ip1,
    )
}

pub fn discrepancy(r: &PairScoreRecord) -> f64 {
    let (fwd, bwd) = joint_log_probs(r);
    fwd - bwd
}

/// PMI estimated from each direction, with the two-mask scores standing in
/// for the marginals:
///
/// - forward: `ln P(x_{i+1} | x_i) - ln P(x_{i+1})`
/// - backward: `ln P(x_i | x_{i+1}) - ln P(x_i)`
///
/// `pmi_fwd - pmi_bwd` equals the discrepancy.
pub fn pmi(r: &PairScoreRecord) -> (f64, f64) {
    (
        r.lp_ip1_given_i - r.lp_ip1_both_masked,
        r.lp_i_given_ip1 - r.lp_i_both_masked,
    )
}

/// `ΔH = H_{i+1|i} - H_{i|i+1} + H_{i+1} - H_i`.
///
/// Large positive values mean low two-mask entropy and high one-mask entropy
/// when decoding position `i` first.
pub fn delta_entropy(r: &PairScoreRecord) -> f64 {
    r.h_ip1_given_i - r.h_i_given_ip1 + r.h_ip1 - r.h_i
}

/// Maps ΔH onto a decoding order. `|ΔH| <= tolerance` is indifferent.
pub fn recommend_order(r: &PairScoreRecord, tolerance: f64) -> DecodingOrder {
    order_from_delta(delta_entropy(r), tolerance)
}

pub fn order_from_delta(delta_h: f64, tolerance: f64) -> DecodingOrder {
    debug_assert!(tolerance >= 0.0);
    if delta_h > tolerance {
        DecodingOrder::IFirst
    } else if delta_h < -tolerance {
        DecodingOrder::Ip1First
    } else {
        DecodingOrder::Indifferent
    }
}

pub fn analyze_record(r: &PairScoreRecord, tolerance: f64) -> DiscrepancyResult {
    let (log_p_fwd, log_p_bwd) = joint_log_probs(r);
    let (pmi_fwd, pmi_bwd) = pmi(r);
    let delta_h = delta_entropy(r);
    DiscrepancyResult {
        record_id: r.record_id.clone(),
        log_p_fwd,
        log_p_bwd,
        d: log_p_fwd - log_p_bwd,
        pmi_fwd,
        pmi_bwd,
        delta_h,
        recommended_order: order_from_delta(delta_h, tolerance),
    }
}
