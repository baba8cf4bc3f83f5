use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, TestReport};
use crate::records::ModelMeta;
use crate::stats::{build_variance_design, ols_fit, RegressionFit, RegressionMode, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRegression {
    pub dataset_id: String,
    pub mode: RegressionMode,
    pub fit: RegressionFit,
}

/// Regresses per-model discrepancy variance on model attributes, using the
/// cells of one dataset. `dataset` may be omitted when the report covers a
/// single dataset.
pub fn run_variance_regression(
    report: &TestReport,
    models: &[ModelMeta],
    mode: RegressionMode,
    baseline_family: Option<&str>,
    dataset: Option<&str>,
) -> Result<VarianceRegression, AnalysisError> {
    let datasets: BTreeSet<&str> = report.cells.iter().map(|c| c.dataset_id.as_str()).collect();
    let dataset_id = match dataset {
        Some(d) if datasets.contains(d) => d.to_string(),
        Some(d) => return Err(AnalysisError::UnknownDataset(d.to_string())),
        None if datasets.len() == 1 => datasets.iter().next().unwrap().to_string(),
        None if datasets.is_empty() => return Err(AnalysisError::NoCells),
        None => {
            let names: Vec<&str> = datasets.into_iter().collect();
            return Err(AnalysisError::AmbiguousDataset(names.join(", ")));
        }
    };

    let mut population = Vec::new();
    for cell in report.cells.iter().filter(|c| c.dataset_id == dataset_id) {
        let meta = models
            .iter()
            .find(|m| m.model_id == cell.model_id)
            .ok_or_else(|| AnalysisError::UnknownModel(cell.model_id.clone()))?;
        let v = cell
            .variance_d
            .ok_or_else(|| AnalysisError::NoVariance(cell.model_id.clone()))?;
        population.push((meta.clone(), v));
    }

    let (design, y) = build_variance_design(&population, mode, baseline_family)?;
    if design.n_rows() <= design.n_cols() {
        return Err(StatsError::TooFewModels {
            required: design.n_cols() + 1,
            found: design.n_rows(),
        }
        .into());
    }
    let fit = ols_fit(&design, &y)?;
    Ok(VarianceRegression {
        dataset_id,
        mode,
        fit,
    })
}
