//! Statistical machinery: signed-rank test, Benjamini–Yekutieli adjustment,
//! least squares with t-tests, variance-regression designs and correlation.

mod correlation;
mod design;
mod fdr;
mod ols;
mod ranks;
mod summary;
mod wilcoxon;

use thiserror::Error;

pub use correlation::{rank_correlation, CorrelationKind};
pub use design::{build_variance_design, default_baseline_family, RegressionMode, COARSE_LABELS};
pub use fdr::{benjamini_yekutieli, harmonic_number};
pub use ols::{ols_fit, student_t_two_sided_p, DesignMatrix, RegressionFit};
pub use ranks::average_ranks;
pub use summary::{mean, median, quantile_sorted, sample_variance, Quartiles};
pub use wilcoxon::{
    exact_signed_rank_p, wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult, EXACT_MAX_N,
};

/// Default significance level.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    #[error("p-value {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("design is rank deficient: column `{column}` is collinear with earlier columns")]
    RankDeficient { column: String },
    #[error("underdetermined fit: {n} observations for {p} columns")]
    Underdetermined { n: usize, p: usize },
    #[error("design has {rows} rows but response has {len} values")]
    DimensionMismatch { rows: usize, len: usize },
    #[error("need at least {required} models, found {found}")]
    TooFewModels { required: usize, found: usize },
    #[error("fine-grained design needs at least 2 families, found {found}")]
    TooFewFamilies { found: usize },
    #[error("baseline family `{0}` has no models")]
    UnknownFamily(String),
    #[error("model `{0}` appears more than once")]
    DuplicateModel(String),
    #[error("input is constant")]
    ConstantInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {required} observations, found {found}")]
    TooFewObservations { required: usize, found: usize },
}

pub(crate) fn ensure_finite(xs: &[f64]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFiniteInput)
    }
}
