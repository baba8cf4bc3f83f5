//! Designs for regressing per-model discrepancy variance on model attributes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ols::DesignMatrix;
use super::StatsError;
use crate::records::ModelMeta;

/// Column labels of the coarse design, in order.
pub const COARSE_LABELS: [&str; 5] = ["Intercept", "Size", "Data size", "Type", "I: Type–Size"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegressionMode {
    /// `[1, S, V, T, S·T]` with `T` the autoregressive indicator.
    #[default]
    Coarse,
    /// `[1, S, V]` plus one indicator and one size interaction per
    /// non-baseline family.
    Fine,
}

impl std::str::FromStr for RegressionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "COARSE" => Ok(RegressionMode::Coarse),
            "FINE" => Ok(RegressionMode::Fine),
            _ => Err(format!("unknown regression mode `{s}` (COARSE or FINE)")),
        }
    }
}

/// The family with the most models; ties go to the lexicographically
/// smallest name.
pub fn default_baseline_family<'a, I>(families: I) -> Option<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for f in families {
        *counts.entry(f).or_insert(0) += 1;
    }
    // max_by keeps the last maximum, so names compare reversed.
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(f, _)| f.to_string())
}

/// Builds the variance-regression design. Returns the design (labels
/// attached) and the response vector of variances.
pub fn build_variance_design(
    models: &[(ModelMeta, f64)],
    mode: RegressionMode,
    baseline_family: Option<&str>,
) -> Result<(DesignMatrix, Vec<f64>), StatsError> {
    let mut ids = BTreeSet::new();
    for (m, _) in models {
        if !ids.insert(m.model_id.as_str()) {
            return Err(StatsError::DuplicateModel(m.model_id.clone()));
        }
    }
    if ids.len() < 2 {
        return Err(StatsError::TooFewModels {
            required: 2,
            found: ids.len(),
        });
    }
    let y: Vec<f64> = models.iter().map(|(_, v)| *v).collect();

    match mode {
        RegressionMode::Coarse => {
            let rows: Vec<Vec<f64>> = models
                .iter()
                .map(|(m, _)| {
                    let s = m.params_billions;
                    let t = m.model_type.indicator();
                    vec![1.0, s, m.train_gb, t, s * t]
                })
                .collect();
            let labels = COARSE_LABELS.iter().map(|s| s.to_string()).collect();
            Ok((DesignMatrix::from_rows(labels, &rows)?, y))
        }
        RegressionMode::Fine => {
            let families: BTreeSet<&str> = models.iter().map(|(m, _)| m.family.as_str()).collect();
            if families.len() < 2 {
                return Err(StatsError::TooFewFamilies {
                    found: families.len(),
                });
            }
            let baseline = match baseline_family {
                Some(b) if families.contains(b) => b.to_string(),
                Some(b) => return Err(StatsError::UnknownFamily(b.to_string())),
                None => default_baseline_family(models.iter().map(|(m, _)| m.family.as_str()))
                    .expect("at least two families"),
            };
            let others: Vec<&str> = families.into_iter().filter(|f| *f != baseline).collect();

            let mut labels: Vec<String> = vec!["Intercept".into(), "Size".into(), "Data size".into()];
            labels.extend(others.iter().map(|f| format!("T: {f}")));
            labels.extend(others.iter().map(|f| format!("I: Size–{f}")));

            let rows: Vec<Vec<f64>> = models
                .iter()
                .map(|(m, _)| {
                    let s = m.params_billions;
                    let mut row = vec![1.0, s, m.train_gb];
                    let ind: Vec<f64> = others
                        .iter()
                        .map(|f| if m.family == *f { 1.0 } else { 0.0 })
                        .collect();
                    row.extend(&ind);
                    row.extend(ind.iter().map(|i| i * s));
                    row
                })
                .collect();
            Ok((DesignMatrix::from_rows(labels, &rows)?, y))
        }
    }
}
