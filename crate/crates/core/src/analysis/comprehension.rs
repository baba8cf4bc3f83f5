use serde::{Deserialize, Serialize};

use crate::records::PairScoreRecord;
use crate::stats::Quartiles;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComprehension {
    pub model_id: String,
    pub n_records: usize,
    /// Rank of w_i with both positions masked.
    pub rank1: Quartiles,
    /// Rank of w_{i+1} once w_i is revealed.
    pub rank2: Quartiles,
    pub log10_rank1: Quartiles,
    pub log10_rank2: Quartiles,
    pub n_eos: usize,
    /// Quartiles of exp(eos_lp), absent when no record carries it.
    pub eos_prob: Option<Quartiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComprehensionSummary {
    pub models: Vec<ModelComprehension>,
}

/// Groups are taken as given; empty groups are dropped.
pub fn run_comprehension_summary(groups: &[(String, Vec<&PairScoreRecord>)]) -> ComprehensionSummary {
    let models = groups
        .iter()
        .filter(|(_, records)| !records.is_empty())
        .map(|(model_id, records)| {
            let r1: Vec<f64> = records.iter().map(|r| r.rank_i_both_masked as f64).collect();
            let r2: Vec<f64> = records.iter().map(|r| r.rank_ip1_given_i as f64).collect();
            let log10 = |xs: &[f64]| xs.iter().map(|x| x.log10()).collect::<Vec<f64>>();
            let eos: Vec<f64> = records.iter().filter_map(|r| r.eos_lp).map(f64::exp).collect();
            ModelComprehension {
                model_id: model_id.clone(),
                n_records: records.len(),
                rank1: Quartiles::of(&r1).expect("nonempty"),
                rank2: Quartiles::of(&r2).expect("nonempty"),
                log10_rank1: Quartiles::of(&log10(&r1)).expect("nonempty"),
                log10_rank2: Quartiles::of(&log10(&r2)).expect("nonempty"),
                n_eos: eos.len(),
                eos_prob: Quartiles::of(&eos),
            }
        })
        .collect();
    ComprehensionSummary { models }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::group_by_model;
    use crate::discrepancy::tests::record_with;

    fn with_ranks(model: &str, ranks: &[(u64, u64)], eos: Option<f64>) -> Vec<PairScoreRecord> {
        ranks
            .iter()
            .map(|(a, b)| {
                let mut r = record_with([-1.0; 4], [1.0; 4]);
                r.model_id = model.into();
                r.rank_i_both_masked = *a;
                r.rank_ip1_given_i = *b;
                r.eos_lp = eos;
                r
            })
            .collect()
    }

    #[test]
    fn quartiles_of_ranks() {
        let mut records = with_ranks("flat", &[(1, 1); 4], None);
        records.extend(with_ranks("steps", &[(1, 10), (2, 10), (3, 100), (4, 1000), (5, 10)], Some(-0.5)));
        let summary = run_comprehension_summary(&group_by_model(&records));
        let flat = &summary.models[0];
        assert_eq!(flat.rank1, Quartiles { q1: 1.0, median: 1.0, q3: 1.0 });
        assert_eq!(flat.log10_rank2, Quartiles { q1: 0.0, median: 0.0, q3: 0.0 });
        assert_eq!(flat.eos_prob, None);
        assert_eq!(flat.n_eos, 0);

        let steps = &summary.models[1];
        assert_eq!(steps.rank1, Quartiles { q1: 2.0, median: 3.0, q3: 4.0 });
        assert_eq!(steps.log10_rank2.median, 1.0);
        assert_eq!(steps.n_eos, 5);
        assert!((steps.eos_prob.unwrap().median - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn eos_only_where_present() {
        let mut records = with_ranks("ar", &[(1, 1), (1, 1)], Some(0.0));
        records.extend(with_ranks("ar", &[(1, 1)], None));
        let summary = run_comprehension_summary(&group_by_model(&records));
        assert_eq!(summary.models[0].n_records, 3);
        assert_eq!(summary.models[0].n_eos, 2);
        assert_eq!(summary.models[0].eos_prob.unwrap().q1, 1.0);
    }
}
