use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::records::{LogProbField, PairScoreRecord};

/// Additive shift of one log-probability field: `bias + N(0, sigma²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub target_field: LogProbField,
    pub bias: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbed {
    pub records: Vec<PairScoreRecord>,
    /// Number of values pushed above zero and clamped back to 0.
    pub clamped: usize,
}

/// Applies `spec` to every record. Record `k` draws its noise from its own
/// ChaCha stream `k`, so output depends only on `(seed, k)`.
pub fn perturb_records(
    records: &[PairScoreRecord],
    spec: &PerturbationSpec,
) -> Result<Perturbed, OracleError> {
    if !(spec.noise_sigma.is_finite() && spec.noise_sigma >= 0.0) {
        return Err(OracleError::InvalidSigma(spec.noise_sigma));
    }
    let mut clamped = 0;
    let records = records
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let mut out = r.clone();
            let noise = if spec.noise_sigma > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream(k as u64);
                let z: f64 = rng.sample(StandardNormal);
                spec.noise_sigma * z
            } else {
                0.0
            };
            let field = out.log_prob_mut(spec.target_field);
            *field += spec.bias + noise;
            if *field > 0.0 {
                *field = 0.0;
                clamped += 1;
            }
            out
        })
        .collect();
    Ok(Perturbed { records, clamped })
}
