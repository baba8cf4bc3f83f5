use std::cmp::Ordering;

use super::StatsError;

/// `c(m) = Σ_{k=1..m} 1/k`.
pub fn harmonic_number(m: usize) -> f64 {
    (1..=m).map(|k| 1.0 / k as f64).sum()
}

/// Benjamini–Yekutieli step-up adjustment, valid under arbitrary dependence.
///
/// For sorted `p_(i)`: `adj_(i) = min(1, min_{j>=i} p_(j) m c(m) / j)`.
/// Results come back in input order.
pub fn benjamini_yekutieli(p: &[f64]) -> Result<Vec<f64>, StatsError> {
    if p.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if let Some(&bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(StatsError::InvalidProbability(bad));
    }
    let m = p.len();
    let scale = m as f64 * harmonic_number(m);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap_or(Ordering::Equal));

    let mut adjusted = vec![0.0; m];
    let mut running = f64::INFINITY;
    for (pos, &idx) in order.iter().enumerate().rev() {
        let term = p[idx] * scale / (pos + 1) as f64;
        running = running.min(term);
        adjusted[idx] = running.min(1.0);
    }
    Ok(adjusted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_test_unchanged() {
        assert_eq!(benjamini_yekutieli(&[0.03]).unwrap(), vec![0.03]);
    }

    #[test]
    fn four_values_collapse() {
        let adj = benjamini_yekutieli(&[0.01, 0.02, 0.03, 0.04]).unwrap();
        // c(4) = 25/12, so 0.01 * 4 * 25/12 = 1/12
        for a in adj {
            assert!((a - 1.0 / 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn order_is_preserved_and_capped() {
        let adj = benjamini_yekutieli(&[0.9, 0.001, 0.5]).unwrap();
        let c = harmonic_number(3);
        assert!((adj[1] - 0.001 * 3.0 * c).abs() < 1e-15);
        assert_eq!(adj[0], 1.0);
        assert_eq!(adj[2], 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(benjamini_yekutieli(&[]), Err(StatsError::EmptyInput));
        assert_eq!(
            benjamini_yekutieli(&[0.2, 1.5]),
            Err(StatsError::InvalidProbability(1.5))
        );
        assert!(benjamini_yekutieli(&[f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn bounds_monotonicity_permutation(p in proptest::collection::vec(0.0f64..=1.0, 1..60)) {
            let adj = benjamini_yekutieli(&p).unwrap();
            for (a, raw) in adj.iter().zip(&p) {
                prop_assert!(*a >= *raw && *a <= 1.0);
            }
            let mut pairs: Vec<(f64, f64)> = p.iter().copied().zip(adj.iter().copied()).collect();
            pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            for w in pairs.windows(2) {
                prop_assert!(w[0].1 <= w[1].1);
            }
            let mut rev = p.clone();
            rev.reverse();
            let mut adj_rev = benjamini_yekutieli(&rev).unwrap();
            adj_rev.reverse();
            prop_assert_eq!(adj_rev, adj);
        }
    }
}
