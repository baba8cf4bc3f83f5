//! Two-sided Wilcoxon signed-rank test of symmetry about zero.
//!
//! Zero differences are dropped before ranking. Absolute values get average
//! ranks and the statistic is `T = Σ sgn(d_j) R_j`. Small tie-free samples
//! use the exact null distribution, everything else the normal approximation
//! with continuity correction and tie-adjusted variance.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::ranks::{average_ranks, tie_group_sizes};
use super::{ensure_finite, StatsError};

/// Largest number of nonzero differences tested exactly.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
    /// No nonzero differences; p is 1 by convention.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub n_nonzero: usize,
    pub statistic_t: f64,
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

pub fn wilcoxon_signed_rank(d: &[f64]) -> Result<WilcoxonResult, StatsError> {
    if d.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    ensure_finite(d)?;

    let nonzero: Vec<f64> = d.iter().copied().filter(|&x| x != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            n_nonzero: 0,
            statistic_t: 0.0,
            p_value: 1.0,
            method: WilcoxonMethod::Degenerate,
        });
    }

    let abs: Vec<f64> = nonzero.iter().map(|x| x.abs()).collect();
    let (ranks, has_ties) = average_ranks(&abs);
    let statistic_t: f64 = nonzero
        .iter()
        .zip(&ranks)
        .map(|(x, r)| x.signum() * r)
        .sum();
    let w_plus: f64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();

    if n <= EXACT_MAX_N && !has_ties {
        // Tie-free ranks are exactly 1..=n, so W+ is an integer.
        let p_value = exact_signed_rank_p(n, w_plus.round() as u64);
        return Ok(WilcoxonResult {
            n_nonzero: n,
            statistic_t,
            p_value,
            method: WilcoxonMethod::Exact,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_group_sizes(&abs)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p_value = erfc(z / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
    Ok(WilcoxonResult {
        n_nonzero: n,
        statistic_t,
        p_value,
        method: WilcoxonMethod::NormalApprox,
    })
}

/// Exact two-sided p-value for an observed positive-rank sum `w_plus` with
/// untied ranks `1..=n`: `min(1, 2 min(P(W >= w), P(W <= w)))`.
///
/// The null counts are built by subset-sum dynamic programming, which counts
/// the same `2^n` equally likely sign assignments as direct enumeration.
pub fn exact_signed_rank_p(n: usize, w_plus: u64) -> f64 {
    assert!(n <= 62, "exact distribution limited to n <= 62");
    let max_sum = n * (n + 1) / 2;
    let mut counts = vec![0u64; max_sum + 1];
    counts[0] = 1;
    for rank in 1..=n {
        for s in (rank..=max_sum).rev() {
            counts[s] += counts[s - rank];
        }
    }
    let w = (w_plus as usize).min(max_sum);
    let upper: u64 = counts[w..].iter().sum();
    let lower: u64 = counts[..=w].iter().sum();
    let total = (1u64 << n) as f64;
    (2.0 * upper.min(lower) as f64 / total).min(1.0)
}
