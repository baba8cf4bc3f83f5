use serde::{Deserialize, Serialize};

use super::{cell_discrepancies, AnalysisError, Cell};
use crate::discrepancy::{delta_entropy, order_from_delta, DecodingOrder};
use crate::records::PairScoreRecord;
use crate::stats::{rank_correlation, CorrelationKind, StatsError};

const MIN_RECORDS: usize = 3;

/// Correlations for one cell. Entropies of the i-first path are paired with
/// `d`, those of the (i+1)-first path with `-d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCell {
    pub model_id: String,
    pub dataset_id: String,
    pub n_pairs: usize,
    pub corr_d_h_i: Option<f64>,
    pub corr_d_h_ip1_given_i: Option<f64>,
    pub corr_neg_d_h_ip1: Option<f64>,
    pub corr_neg_d_h_i_given_ip1: Option<f64>,
    /// Why the cell has no correlations, if it was skipped.
    pub skipped: Option<String>,
    /// Entropy columns constant over the cell; their correlations are empty.
    pub constant_entropies: Vec<String>,
}

impl EntropyCell {
    pub fn correlations(&self) -> Option<[f64; 4]> {
        Some([
            self.corr_d_h_i?,
            self.corr_d_h_ip1_given_i?,
            self.corr_neg_d_h_ip1?,
            self.corr_neg_d_h_i_given_ip1?,
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCorrelationTable {
    pub kind: CorrelationKind,
    pub cells: Vec<EntropyCell>,
}

impl EntropyCorrelationTable {
    pub fn skipped(&self) -> impl Iterator<Item = &EntropyCell> {
        self.cells.iter().filter(|c| c.skipped.is_some())
    }
}

pub fn run_entropy_correlations(
    cells: &[Cell<'_>],
    kind: CorrelationKind,
    zero_tolerance: f64,
) -> Result<EntropyCorrelationTable, AnalysisError> {
    let mut out = Vec::with_capacity(cells.len());
    for (key, records) in cells {
        let mut cell = EntropyCell {
            model_id: key.model_id.clone(),
            dataset_id: key.dataset_id.clone(),
            n_pairs: records.len(),
            corr_d_h_i: None,
            corr_d_h_ip1_given_i: None,
            corr_neg_d_h_ip1: None,
            corr_neg_d_h_i_given_ip1: None,
            skipped: None,
            constant_entropies: Vec::new(),
        };
        if records.len() < MIN_RECORDS {
            cell.skipped = Some(format!("TOO_FEW_RECORDS: {} < {MIN_RECORDS}", records.len()));
            out.push(cell);
            continue;
        }
        let d = cell_discrepancies(records, zero_tolerance);
        if d.iter().all(|x| *x == d[0]) {
            cell.skipped = Some("CONSTANT_INPUT: d is constant".into());
            out.push(cell);
            continue;
        }
        let neg_d: Vec<f64> = d.iter().map(|x| -x).collect();
        let column = |f: fn(&PairScoreRecord) -> f64| records.iter().map(|r| f(r)).collect::<Vec<f64>>();

        let pairs: [(&str, &[f64], Vec<f64>); 4] = [
            ("h_i", &d, column(|r| r.h_i)),
            ("h_ip1_given_i", &d, column(|r| r.h_ip1_given_i)),
            ("h_ip1", &neg_d, column(|r| r.h_ip1)),
            ("h_i_given_ip1", &neg_d, column(|r| r.h_i_given_ip1)),
        ];
        let mut values = [None; 4];
        for (slot, (name, x, h)) in values.iter_mut().zip(&pairs) {
            match rank_correlation(x, h, kind) {
                Ok(v) => *slot = Some(v),
                Err(StatsError::ConstantInput) => cell.constant_entropies.push(name.to_string()),
                Err(e) => return Err(e.into()),
            }
        }
        [
            cell.corr_d_h_i,
            cell.corr_d_h_ip1_given_i,
            cell.corr_neg_d_h_ip1,
            cell.corr_neg_d_h_i_given_ip1,
        ] = values;
        out.push(cell);
    }
    Ok(EntropyCorrelationTable { kind, cells: out })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRecommendation {
    pub record_id: String,
    pub delta_h: f64,
    pub recommended_order: DecodingOrder,
}

pub fn order_recommendations(records: &[PairScoreRecord], tolerance: f64) -> Vec<OrderRecommendation> {
    records
        .iter()
        .map(|r| {
            let delta_h = delta_entropy(r);
            OrderRecommendation {
                record_id: r.record_id.clone(),
                delta_h,
                recommended_order: order_from_delta(delta_h, tolerance),
            }
        })
        .collect()
}
