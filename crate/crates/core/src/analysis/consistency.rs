use serde::{Deserialize, Serialize};

use super::{cell_discrepancies, AnalysisError, Cell};
use crate::stats::{benjamini_yekutieli, median, sample_variance, wilcoxon_signed_rank, WilcoxonResult};

pub const CORRECTION_NAME: &str = "benjamini-yekutieli";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCell {
    pub model_id: String,
    pub dataset_id: String,
    pub n_pairs: usize,
    pub median_d: f64,
    /// Unbiased sample variance of d; absent for single-record cells.
    pub variance_d: Option<f64>,
    pub wilcoxon: WilcoxonResult,
    pub p_adjusted: f64,
    /// `p_adjusted < alpha`.
    pub rejected: bool,
    /// `p_adjusted == alpha`: not rejected under the strict rule, but worth
    /// a look.
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub cells: Vec<TestCell>,
    pub alpha: f64,
    pub correction: String,
    pub zero_tolerance: f64,
}

impl TestReport {
    pub fn cell(&self, model_id: &str, dataset_id: &str) -> Option<&TestCell> {
        self.cells
            .iter()
            .find(|c| c.model_id == model_id && c.dataset_id == dataset_id)
    }
}

/// Runs one signed-rank test per cell and adjusts all p-values as a single
/// family. Cells are reported in input order.
pub fn run_consistency_tests(
    cells: &[Cell<'_>],
    alpha: f64,
    zero_tolerance: f64,
) -> Result<TestReport, AnalysisError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AnalysisError::InvalidAlpha(alpha));
    }
    if cells.is_empty() {
        return Err(AnalysisError::NoCells);
    }

    let mut partial = Vec::with_capacity(cells.len());
    for (key, records) in cells {
        if records.is_empty() {
            return Err(AnalysisError::EmptyCell {
                model_id: key.model_id.clone(),
                dataset_id: key.dataset_id.clone(),
            });
        }
        let d = cell_discrepancies(records, zero_tolerance);
        let wilcoxon = wilcoxon_signed_rank(&d)?;
        partial.push((key, d.len(), median(&d).expect("nonempty"), sample_variance(&d), wilcoxon));
    }

    let raw: Vec<f64> = partial.iter().map(|p| p.4.p_value).collect();
    let adjusted = benjamini_yekutieli(&raw)?;

    let cells = partial
        .into_iter()
        .zip(adjusted)
        .map(|((key, n_pairs, median_d, variance_d, wilcoxon), p_adjusted)| TestCell {
            model_id: key.model_id.clone(),
            dataset_id: key.dataset_id.clone(),
            n_pairs,
            median_d,
            variance_d,
            wilcoxon,
            p_adjusted,
            rejected: p_adjusted < alpha,
            at_boundary: p_adjusted == alpha,
        })
        .collect();

    Ok(TestReport {
        cells,
        alpha,
        correction: CORRECTION_NAME.to_string(),
        zero_tolerance,
    })
}
