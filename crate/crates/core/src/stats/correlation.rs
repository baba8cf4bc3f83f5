use serde::{Deserialize, Serialize};

use super::ranks::average_ranks;
use super::{ensure_finite, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CorrelationKind {
    /// Pearson correlation of average ranks.
    #[default]
    Spearman,
    Pearson,
}

impl CorrelationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationKind::Spearman => "SPEARMAN",
            CorrelationKind::Pearson => "PEARSON",
        }
    }
}

impl std::str::FromStr for CorrelationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SPEARMAN" => Ok(CorrelationKind::Spearman),
            "PEARSON" => Ok(CorrelationKind::Pearson),
            _ => Err(format!("unknown correlation kind `{s}` (SPEARMAN or PEARSON)")),
        }
    }
}

pub fn rank_correlation(a: &[f64], b: &[f64], kind: CorrelationKind) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 3 {
        return Err(StatsError::TooFewObservations {
            required: 3,
            found: a.len(),
        });
    }
    ensure_finite(a)?;
    ensure_finite(b)?;
    match kind {
        CorrelationKind::Pearson => pearson(a, b),
        CorrelationKind::Spearman => pearson(&average_ranks(a).0, &average_ranks(b).0),
    }
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if is_constant(a) || is_constant(b) {
        return Err(StatsError::ConstantInput);
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|x| *x == xs[0])
}
