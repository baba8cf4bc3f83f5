#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use contests::oracle::{build_synthetic_sentences, fit_ngram, EmitIds};
use contests::records::PairScoreRecord;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_contests"))
}

pub fn run_bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .env_remove("CONTESTS_OUT_DIR")
        .output()
        .expect("binary runs")
}

pub fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn record(lp: [f64; 4], h: [f64; 4]) -> PairScoreRecord {
    PairScoreRecord {
        record_id: "r".into(),
        dataset_id: "d".into(),
        model_id: "m".into(),
        position: 0,
        token_i: "a".into(),
        token_ip1: "b".into(),
        lp_i_both_masked: lp[0],
        lp_ip1_given_i: lp[1],
        lp_ip1_both_masked: lp[2],
        lp_i_given_ip1: lp[3],
        h_i: h[0],
        h_ip1_given_i: h[1],
        h_ip1: h[2],
        h_i_given_ip1: h[3],
        rank_i_both_masked: 1,
        rank_ip1_given_i: 1,
        eos_lp: None,
    }
}

/// A record whose discrepancy is exactly `d` for moderate `d`.
pub fn record_with_d(d: f64, h: [f64; 4]) -> PairScoreRecord {
    record([-2.0 + d.min(0.0), -2.0, -2.0 - d.max(0.0), -2.0], h)
}

/// Word pairs drawn from small adjective/noun lists.
pub fn word_pairs(n: usize, seed: u64) -> Vec<(String, String)> {
    let adj = ["red", "old", "big", "small", "green", "fast", "tall", "dark", "new", "cold", "soft", "loud"];
    let noun = ["car", "man", "tree", "house", "dog", "book", "road", "lake", "city", "bird", "ship", "song"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (
                adj.choose(&mut rng).unwrap().to_string(),
                noun.choose(&mut rng).unwrap().to_string(),
            )
        })
        .collect()
}

pub fn write_pairs_tsv(path: &Path, pairs: &[(String, String)]) {
    let text: String = pairs.iter().map(|(a, b)| format!("{a}\t{b}\n")).collect();
    std::fs::write(path, text).unwrap();
}

/// Consistent oracle records for `n` synthetic template sentences.
pub fn oracle_records(n: usize, seed: u64, model_id: &str) -> Vec<PairScoreRecord> {
    let sentences = build_synthetic_sentences(&word_pairs(n, seed)).unwrap();
    let corpus: Vec<Vec<String>> = sentences.iter().map(|s| s.tokens.clone()).collect();
    let oracle = fit_ngram(&corpus, 1, 0.1).unwrap();
    let positions: Vec<(&[String], usize)> = corpus.iter().map(|s| (s.as_slice(), 0)).collect();
    let ids = EmitIds {
        dataset_id: "synthetic".into(),
        model_id: model_id.into(),
        record_prefix: format!("{model_id}-{seed}"),
    };
    oracle.emit_consistent_records(&positions, &ids).unwrap()
}

/// Signed-rank p-value by enumerating all 2^n sign assignments. Requires
/// distinct nonzero magnitudes.
pub fn brute_force_signed_rank_p(d: &[f64]) -> f64 {
    let nz: Vec<f64> = d.iter().copied().filter(|x| *x != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return 1.0;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| nz[a].abs().total_cmp(&nz[b].abs()));
    let mut rank = vec![0u64; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as u64 + 1;
    }
    let observed: u64 = (0..n).filter(|&i| nz[i] > 0.0).map(|i| rank[i]).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: u64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| rank[i]).sum();
        if w <= observed {
            le += 1;
        }
        if w >= observed {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * le.min(ge) as f64 / total).min(1.0)
}

/// Average ranks by explicit pairwise counting.
pub fn brute_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|x| {
            let below = xs.iter().filter(|y| *y < x).count() as f64;
            let equal = xs.iter().filter(|y| *y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn brute_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va.sqrt() * vb.sqrt())
}

pub fn random_record<R: Rng>(rng: &mut R, k: usize) -> PairScoreRecord {
    let words = ["the", "cat", "naïve", "\"quoted\"", "tab\there", "日本", "a\\b", ""];
    let lp = |rng: &mut R| -> f64 {
        match rng.random_range(0..10) {
            0 => 0.0,
            1 => -f64::MIN_POSITIVE,
            2 => -1e-300,
            3 => -700.0 * rng.random::<f64>(),
            _ => -rng.random::<f64>() * 20.0,
        }
    };
    let h = |rng: &mut R| -> f64 {
        match rng.random_range(0..6) {
            0 => 0.0,
            1 => 1e-17,
            _ => rng.random::<f64>() * 12.0,
        }
    };
    let token = |rng: &mut R| -> String {
        let w = words.choose(rng).unwrap();
        if w.is_empty() {
            format!("tok{}", rng.random::<u16>())
        } else {
            w.to_string()
        }
    };
    PairScoreRecord {
        record_id: format!("rec-{k}"),
        dataset_id: format!("ds{}", rng.random_range(0..3)),
        model_id: format!("model/{}", rng.random_range(0..4)),
        position: rng.random_range(0..u64::MAX >> 11),
        token_i: token(rng),
        token_ip1: token(rng),
        lp_i_both_masked: lp(rng),
        lp_ip1_given_i: lp(rng),
        lp_ip1_both_masked: lp(rng),
        lp_i_given_ip1: lp(rng),
        h_i: h(rng),
        h_ip1_given_i: h(rng),
        h_ip1: h(rng),
        h_i_given_ip1: h(rng),
        rank_i_both_masked: rng.random_range(1..u64::MAX),
        rank_ip1_given_i: rng.random_range(1..50_000),
        eos_lp: rng.random_bool(0.5).then(|| lp(rng)),
    }
}
