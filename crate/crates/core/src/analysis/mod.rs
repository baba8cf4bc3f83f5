//! Study-level analyses over record bundles: per model×dataset consistency
//! tests with one joint Benjamini–Yekutieli family, variance regression
//! across models, entropy–discrepancy correlations, and rank/EOS summaries.

mod comprehension;
mod consistency;
mod entropy;
pub mod export;
mod regression;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discrepancy::discrepancy;
use crate::records::PairScoreRecord;
use crate::stats::StatsError;

pub use comprehension::{run_comprehension_summary, ComprehensionSummary, ModelComprehension};
pub use consistency::{run_consistency_tests, TestCell, TestReport, CORRECTION_NAME};
pub use entropy::{
    order_recommendations, run_entropy_correlations, EntropyCell, EntropyCorrelationTable,
    OrderRecommendation,
};
pub use export::BoxplotRow;
pub use regression::{run_variance_regression, VarianceRegression};

/// Discrepancies with magnitude below this are treated as exact zeros.
/// Consistent scorers still leave rounding residue of order 1e-15.
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no cells to analyse")]
    NoCells,
    #[error("cell ({model_id}, {dataset_id}) has no records")]
    EmptyCell { model_id: String, dataset_id: String },
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("model `{0}` has no metadata")]
    UnknownModel(String),
    #[error("report spans several datasets ({0}); select one")]
    AmbiguousDataset(String),
    #[error("dataset `{0}` has no cells")]
    UnknownDataset(String),
    #[error("model `{0}` has fewer than two records, so no variance")]
    NoVariance(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub model_id: String,
    pub dataset_id: String,
}

pub type Cell<'a> = (CellKey, Vec<&'a PairScoreRecord>);

/// Groups records by `(model_id, dataset_id)`, sorted by key, each group in
/// input order.
pub fn group_by_cell(records: &[PairScoreRecord]) -> Vec<Cell<'_>> {
    let mut groups: BTreeMap<CellKey, Vec<&PairScoreRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry(CellKey {
                model_id: r.model_id.clone(),
                dataset_id: r.dataset_id.clone(),
            })
            .or_default()
            .push(r);
    }
    groups.into_iter().collect()
}

pub fn group_by_model(records: &[PairScoreRecord]) -> Vec<(String, Vec<&PairScoreRecord>)> {
    let mut groups: BTreeMap<String, Vec<&PairScoreRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.model_id.clone()).or_default().push(r);
    }
    groups.into_iter().collect()
}

/// Per-record discrepancies with sub-tolerance values snapped to zero.
pub fn cell_discrepancies(records: &[&PairScoreRecord], zero_tolerance: f64) -> Vec<f64> {
    records
        .iter()
        .map(|r| {
            let d = discrepancy(r);
            if d.abs() < zero_tolerance {
                0.0
            } else {
                d
            }
        })
        .collect()
}
