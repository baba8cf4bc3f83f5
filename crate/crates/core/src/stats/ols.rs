//! Ordinary least squares via Householder QR, with classical standard errors
//! and two-sided t-tests.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::{ensure_finite, StatsError};

/// Relative residual norm below which a column counts as collinear with the
/// columns before it.
const RANK_TOL: f64 = 1e-10;

/// Row-major `n × p` design with one label per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    labels: Vec<String>,
    rows: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_rows(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, StatsError> {
        let p = labels.len();
        let mut data = Vec::with_capacity(rows.len() * p);
        for row in rows {
            if row.len() != p {
                return Err(StatsError::LengthMismatch {
                    left: row.len(),
                    right: p,
                });
            }
            data.extend_from_slice(row);
        }
        Ok(DesignMatrix {
            labels,
            rows: rows.len(),
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let p = self.n_cols();
        &self.data[row * p..(row + 1) * p]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, col)).collect()
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, labels: &[&str]) -> Option<DesignMatrix> {
        let idx: Option<Vec<usize>> = labels
            .iter()
            .map(|l| self.labels.iter().position(|x| x == l))
            .collect();
        let idx = idx?;
        let rows: Vec<Vec<f64>> = (0..self.rows)
            .map(|i| idx.iter().map(|&j| self.get(i, j)).collect())
            .collect();
        DesignMatrix::from_rows(labels.iter().map(|s| s.to_string()).collect(), &rows).ok()
    }

    fn has_intercept(&self) -> bool {
        (0..self.n_cols()).any(|j| (0..self.rows).all(|i| self.get(i, j) == 1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub design_labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub n: usize,
    pub df_resid: usize,
    /// RSS / (n - p).
    pub sigma2: f64,
    pub residuals: Vec<f64>,
}

impl RegressionFit {
    pub fn coefficient(&self, label: &str) -> Option<f64> {
        self.design_labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.coefficients[i])
    }
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom, through
/// the regularized incomplete beta function.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

pub fn ols_fit(design: &DesignMatrix, y: &[f64]) -> Result<RegressionFit, StatsError> {
    let n = design.n_rows();
    let p = design.n_cols();
    if y.len() != n {
        return Err(StatsError::DimensionMismatch { rows: n, len: y.len() });
    }
    if n <= p {
        return Err(StatsError::Underdetermined { n, p });
    }
    ensure_finite(&design.data)?;
    ensure_finite(y)?;

    // Column-major working copy, reduced in place to R (upper p×p block).
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| design.column(j)).collect();
    let mut qty = y.to_vec();

    for k in 0..p {
        let original_norm = norm(&design.column(k));
        let tail_norm = norm(&a[k][k..]);
        if original_norm == 0.0 || tail_norm <= RANK_TOL * original_norm {
            return Err(StatsError::RankDeficient {
                column: design.labels[k].clone(),
            });
        }
        let alpha = if a[k][k] > 0.0 { -tail_norm } else { tail_norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();

        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vtv;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= f * vi;
            }
        };
        for col in a.iter_mut().skip(k + 1) {
            reflect(&mut col[k..]);
        }
        reflect(&mut qty[k..]);
        a[k][k] = alpha;
        for x in a[k][k + 1..].iter_mut() {
            *x = 0.0;
        }
    }

    // R[i][j] = a[j][i] for i <= j
    let r = |i: usize, j: usize| a[j][i];
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r(i, j) * beta[j]).sum();
        beta[i] = (qty[i] - s) / r(i, i);
    }

    // Columns of R^{-1}, by back substitution on unit vectors.
    let mut r_inv = vec![vec![0.0; p]; p];
    #[allow(clippy::needless_range_loop)]
    for col in 0..p {
        for i in (0..=col).rev() {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=col).map(|j| r(i, j) * r_inv[j][col]).sum();
            r_inv[i][col] = (rhs - s) / r(i, i);
        }
    }

    let residuals: Vec<f64> = (0..n)
        .map(|i| {
            let fitted: f64 = design.row(i).iter().zip(&beta).map(|(x, b)| x * b).sum();
            y[i] - fitted
        })
        .collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let df_resid = n - p;
    let sigma2 = rss / df_resid as f64;

    let mut std_errors = Vec::with_capacity(p);
    let mut t_stats = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for (j, &b) in beta.iter().enumerate() {
        // diag((X'X)^{-1}) = row norms of R^{-1}
        let var = sigma2 * r_inv[j].iter().map(|x| x * x).sum::<f64>();
        let se = var.sqrt();
        let t = if se > 0.0 {
            b / se
        } else if b == 0.0 {
            0.0
        } else {
            b.signum() * f64::INFINITY
        };
        std_errors.push(se);
        t_stats.push(t);
        p_values.push(student_t_two_sided_p(t, df_resid as f64));
    }

    let has_intercept = design.has_intercept();
    let tss: f64 = if has_intercept {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean).powi(2)).sum()
    } else {
        y.iter().map(|v| v * v).sum()
    };
    let r_squared = if tss > 0.0 {
        let r2 = 1.0 - rss / tss;
        if has_intercept {
            r2.clamp(0.0, 1.0)
        } else {
            r2
        }
    } else {
        1.0
    };

    Ok(RegressionFit {
        design_labels: design.labels.clone(),
        coefficients: beta,
        std_errors,
        t_stats,
        p_values,
        r_squared,
        n,
        df_resid,
        sigma2,
        residuals,
    })
}

fn norm(xs: &[f64]) -> f64 {
    // scaled to avoid overflow on large columns
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * xs.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}
