//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::fs;
use std::io::Cursor;
use std::path::Path;
use std::time::{Duration, Instant};

use contests::analysis::{
    group_by_cell, run_consistency_tests, run_entropy_correlations, TestReport, DEFAULT_ZERO_TOLERANCE,
};
use contests::discrepancy::{discrepancy, pmi, recommend_order, DecodingOrder};
use contests::oracle::{perturb_records, PerturbationSpec};
use contests::records::{
    parse_records, read_all_records, serialize_records, LogProbField, ModelMeta, ModelType, PairScoreRecord,
    RecordError,
};
use contests::stats::{
    benjamini_yekutieli, build_variance_design, ols_fit, rank_correlation, wilcoxon_signed_rank, CorrelationKind,
    DesignMatrix, RegressionMode, WilcoxonMethod, COARSE_LABELS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn toy_fixture() -> Outcome {
    let r = common::record([0.1f64.ln(), 0.1f64.ln(), 0.9f64.ln(), 0.9f64.ln()], [0.0; 4]);
    let d = discrepancy(&r);
    let want = 0.01f64.ln() - 0.81f64.ln();
    ensure((d - want).abs() < 1e-6, || format!("d = {d}, want {want}"))?;
    ensure((d - (-4.39445)).abs() < 1e-5, || format!("d = {d}"))?;
    let (fwd, bwd) = pmi(&r);
    ensure(((fwd - bwd) - d).abs() < 1e-12, || format!("pmi gap {}", fwd - bwd - d))?;
    Ok(format!("d = {d:.6}"))
}

fn run_cli(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = common::run_bin(args, cwd);
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("`{}` exited {:?}: {}", args.join(" "), out.status.code(), common::stderr_of(&out)))
    }
}

fn oracle_consistency() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pairs = dir.path().join("pairs.tsv");
    common::write_pairs_tsv(&pairs, &common::word_pairs(1000, 100));
    let start = Instant::now();
    run_cli(&["synth", "--pairs", "pairs.tsv", "--out", "synth"], dir.path())?;
    run_cli(&["test", "--records", "synth/records.jsonl", "--out", "report"], dir.path())?;
    let elapsed = start.elapsed();

    let records = read_all_records(Cursor::new(fs::read(dir.path().join("synth/records.jsonl")).unwrap()))
        .map_err(|e| e.to_string())?;
    ensure(records.len() == 1000, || format!("{} records", records.len()))?;
    let max_d = records.iter().map(|r| discrepancy(r).abs()).fold(0.0, f64::max);
    ensure(max_d < 1e-9, || format!("max |d| = {max_d:e}"))?;

    let report: TestReport = serde_json::from_slice(&fs::read(dir.path().join("report/report.json")).unwrap())
        .map_err(|e| e.to_string())?;
    ensure(report.cells.len() == 1, || format!("{} cells", report.cells.len()))?;
    let c = &report.cells[0];
    ensure(c.wilcoxon.method == WilcoxonMethod::Degenerate, || format!("method {:?}", c.wilcoxon.method))?;
    ensure(c.p_adjusted == 1.0 && !c.rejected, || format!("p_adj {} rejected {}", c.p_adjusted, c.rejected))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("max |d| = {max_d:.1e}, synth+test in {:.2}s", elapsed.as_secs_f64()))
}

fn wilcoxon_exactness() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=10);
        let d: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let res = wilcoxon_signed_rank(&d).map_err(|e| e.to_string())?;
        ensure(res.method == WilcoxonMethod::Exact, || format!("seed {seed}: {:?}", res.method))?;
        let want = common::brute_force_signed_rank_p(&d);
        let err = (res.p_value - want).abs();
        worst = worst.max(err);
        ensure(err <= 1e-12, || format!("seed {seed}: {} vs {want}", res.p_value))?;
    }
    Ok(format!("500 vectors, max error {worst:.1e}"))
}

fn rejection_rate(base: &[PairScoreRecord], bias: f64, sigma: f64) -> Result<f64, String> {
    let mut rejected = 0;
    for seed in 0..100u64 {
        let spec = PerturbationSpec {
            target_field: LogProbField::Ip1GivenI,
            bias,
            noise_sigma: sigma,
            seed,
        };
        let p = perturb_records(base, &spec).map_err(|e| e.to_string())?;
        ensure(p.clamped == 0, || format!("{} values clamped", p.clamped))?;
        let report = run_consistency_tests(&group_by_cell(&p.records), 0.05, DEFAULT_ZERO_TOLERANCE)
            .map_err(|e| e.to_string())?;
        if report.cells[0].rejected {
            rejected += 1;
        }
    }
    Ok(rejected as f64 / 100.0)
}

fn wilcoxon_power_and_level() -> Outcome {
    let base = common::oracle_records(200, 101, "oracle");
    let power = rejection_rate(&base, 0.1, 0.05)?;
    let level = rejection_rate(&base, 0.0, 0.05)?;
    ensure(power >= 0.99, || format!("power {power}"))?;
    ensure((0.01..=0.12).contains(&level), || format!("level {level}"))?;
    Ok(format!("power {power:.2}, level {level:.2}"))
}

fn by_correction() -> Outcome {
    let adj = benjamini_yekutieli(&[0.01, 0.02, 0.03, 0.04]).map_err(|e| e.to_string())?;
    for a in &adj {
        ensure((a - 1.0 / 12.0).abs() < 1e-10, || format!("adjusted {adj:?}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for trial in 0..1000 {
        let m = rng.random_range(1..=50);
        let p: Vec<f64> = (0..m)
            .map(|_| if rng.random_bool(0.1) { 1.0 } else { rng.random::<f64>().powi(3) })
            .collect();
        let adj = benjamini_yekutieli(&p).map_err(|e| e.to_string())?;
        for (raw, a) in p.iter().zip(&adj) {
            ensure(a >= raw && *a <= 1.0, || format!("trial {trial}: raw {raw} adjusted {a}"))?;
        }
    }
    Ok("m = 4 example gives 1/12; 1000 random vectors bounded".into())
}

fn meta(id: &str, family: &str, ty: ModelType, s: f64, v: f64) -> ModelMeta {
    ModelMeta {
        model_id: id.into(),
        family: family.into(),
        model_type: ty,
        params_billions: s,
        train_gb: v,
        chat_variant: None,
    }
}

fn eight_models() -> Vec<ModelMeta> {
    use ModelType::*;
    vec![
        meta("bert-base", "bert", Mlm, 0.11, 16.0),
        meta("bert-large", "bert", Mlm, 0.34, 16.0),
        meta("roberta-large", "roberta", Mlm, 0.355, 160.0),
        meta("flan-t5-xl", "t5", Mlm, 2.85, 750.0),
        meta("llama-7b", "llama", Autoregressive, 6.7, 4000.0),
        meta("llama-13b", "llama", Autoregressive, 13.0, 4000.0),
        meta("mistral-7b", "mistral", Autoregressive, 7.24, 3000.0),
        meta("gemma-2b", "gemma", Autoregressive, 2.5, 6000.0),
    ]
}

fn ols_recovery() -> Outcome {
    let population: Vec<(ModelMeta, f64)> = eight_models()
        .into_iter()
        .map(|m| {
            let (s, t) = (m.params_billions, m.model_type.indicator());
            let nu = 1.0 + 2.0 * s + 0.0 * m.train_gb + 0.5 * t + 0.1 * s * t;
            (m, nu)
        })
        .collect();
    let (x, y) = build_variance_design(&population, RegressionMode::Coarse, None).map_err(|e| e.to_string())?;
    let fit = ols_fit(&x, &y).map_err(|e| e.to_string())?;
    let want = [1.0, 2.0, 0.0, 0.5, 0.1];
    let worst = fit
        .coefficients
        .iter()
        .zip(want)
        .map(|(b, w)| (b - w).abs())
        .fold(0.0, f64::max);
    ensure(worst < 1e-8, || format!("coefficients {:?}", fit.coefficients))?;
    ensure((fit.r_squared - 1.0).abs() < 1e-12, || format!("R² = {}", fit.r_squared))?;

    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst_ortho = 0.0f64;
    for _ in 0..100 {
        let p = rng.random_range(2..=6);
        let n = rng.random_range(p + 1..=80);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut row = vec![1.0];
                row.extend((1..p).map(|_| rng.sample::<f64, _>(StandardNormal) * 10.0));
                row
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let x = DesignMatrix::from_rows((0..p).map(|j| format!("c{j}")).collect(), &rows)
            .map_err(|e| e.to_string())?;
        let fit = ols_fit(&x, &y).map_err(|e| e.to_string())?;
        let x_norm = rows.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..p {
            let dot: f64 = rows.iter().zip(&fit.residuals).map(|(row, r)| row[j] * r).sum();
            let scaled = dot.abs() / (x_norm * y_norm);
            worst_ortho = worst_ortho.max(scaled);
            ensure(scaled < 1e-8, || format!("column {j}: |x'r| scaled {scaled:e}"))?;
        }
    }
    Ok(format!("max coefficient error {worst:.1e}, max scaled x'r {worst_ortho:.1e}"))
}

fn table_structure() -> Outcome {
    let population: Vec<(ModelMeta, f64)> = eight_models().into_iter().map(|m| (m, 1.0)).collect();
    let (x, _) = build_variance_design(&population, RegressionMode::Coarse, None).map_err(|e| e.to_string())?;
    let expected = ["Intercept", "Size", "Data size", "Type", "I: Type–Size"];
    ensure(x.labels() == expected && COARSE_LABELS == expected, || {
        format!("labels {:?}", x.labels())
    })?;

    for t in 2..=6usize {
        let population: Vec<(ModelMeta, f64)> = (0..3 * t)
            .map(|k| {
                let m = meta(
                    &format!("m{k}"),
                    &format!("family{}", k % t),
                    ModelType::Mlm,
                    1.0 + k as f64,
                    10.0,
                );
                (m, 1.0)
            })
            .collect();
        let (x, _) = build_variance_design(&population, RegressionMode::Fine, None).map_err(|e| e.to_string())?;
        let want = 1 + 2 + 2 * (t - 1);
        ensure(x.n_cols() == want, || format!("t = {t}: {} columns, want {want}", x.n_cols()))?;
        ensure(x.labels().iter().filter(|l| l.starts_with("T: ")).count() == t - 1, || {
            format!("t = {t}: labels {:?}", x.labels())
        })?;
        ensure(x.labels().iter().filter(|l| l.starts_with("I: Size–")).count() == t - 1, || {
            format!("t = {t}: labels {:?}", x.labels())
        })?;
    }
    Ok("COARSE labels match; FINE has 1 + 2 + 2(t-1) columns for t = 2..6".into())
}

fn entropy_and_order() -> Outcome {
    let big = common::record([-1.0; 4], [0.0, 12.0, 0.0, 0.0]);
    let small = common::record([-1.0; 4], [0.0, 0.0, 1e-4, 0.0]);
    ensure(recommend_order(&big, 1e-4) == DecodingOrder::IFirst, || "ΔH = 12 not I_FIRST".into())?;
    ensure(recommend_order(&small, 1e-4) == DecodingOrder::Indifferent, || {
        "ΔH = 1e-4 not INDIFFERENT".into()
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst = 0.0f64;
    for cell in 0..20 {
        let records: Vec<PairScoreRecord> = (0..50)
            .map(|k| {
                let d = rng.random::<f64>() - 0.5;
                // Rounding introduces ties in the entropy columns.
                let h = [0, 1, 2, 3].map(|j| ((d * j as f64 + rng.random::<f64>() * 3.0) * 20.0).round().abs() / 20.0);
                let mut r = common::record_with_d(d, h);
                r.record_id = format!("c{cell}-{k}");
                r
            })
            .collect();
        for kind in [CorrelationKind::Spearman, CorrelationKind::Pearson] {
            let table = run_entropy_correlations(&group_by_cell(&records), kind, 0.0).map_err(|e| e.to_string())?;
            let got = table.cells[0]
                .correlations()
                .ok_or_else(|| format!("cell {cell} skipped"))?;
            let d: Vec<f64> = records.iter().map(discrepancy).collect();
            let neg: Vec<f64> = d.iter().map(|x| -x).collect();
            let cols: [(&[f64], Vec<f64>); 4] = [
                (&d, records.iter().map(|r| r.h_i).collect()),
                (&d, records.iter().map(|r| r.h_ip1_given_i).collect()),
                (&neg, records.iter().map(|r| r.h_ip1).collect()),
                (&neg, records.iter().map(|r| r.h_i_given_ip1).collect()),
            ];
            for (k, (x, h)) in cols.iter().enumerate() {
                let want = match kind {
                    CorrelationKind::Spearman => {
                        common::brute_pearson(&common::brute_ranks(x), &common::brute_ranks(h))
                    }
                    CorrelationKind::Pearson => common::brute_pearson(x, h),
                };
                let err = (got[k] - want).abs();
                worst = worst.max(err);
                ensure(err < 1e-12, || format!("cell {cell} column {k}: {} vs {want}", got[k]))?;
                ensure(rank_correlation(x, h, kind).is_ok(), || "direct call failed".into())?;
            }
        }
    }
    Ok(format!("orders match; 20 cells x 50 records, max correlation error {worst:.1e}"))
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let records: Vec<PairScoreRecord> = (0..10_000).map(|k| common::random_record(&mut rng, k)).collect();
    let mut buf = Vec::new();
    serialize_records(&mut buf, &records).map_err(|e| e.to_string())?;
    let back = read_all_records(Cursor::new(&buf)).map_err(|e| e.to_string())?;
    ensure(back == records, || "round trip changed records".into())?;
    for (a, b) in records.iter().zip(&back) {
        for f in LogProbField::ALL {
            ensure(a.log_prob(f).to_bits() == b.log_prob(f).to_bits(), || {
                format!("{}: bits differ", a.record_id)
            })?;
        }
    }

    let text = String::from_utf8(buf).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let bad = [(17usize, "{\"record_id\": 3"), (4242, "not json at all"), (9999, "[1, 2]")];
    for (line, content) in bad {
        lines[line - 1] = content.to_string();
    }
    lines[7000 - 1] = lines[7000 - 1].replace("\"h_i\":", "\"h_i\":-");
    let joined = lines.join("\n");
    let errors: Vec<usize> = parse_records(Cursor::new(joined))
        .filter_map(|r| r.err())
        .map(|e| e.line())
        .collect();
    ensure(errors == [17, 4242, 7000, 9999], || format!("error lines {errors:?}"))?;
    match read_all_records(Cursor::new(lines.join("\n"))) {
        Err(RecordError::MalformedLine { line: 17, .. }) => {}
        other => return Err(format!("first error {other:?}")),
    }
    Ok("10,000 records bit-exact; errors at lines 17, 4242, 7000, 9999".into())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    common::write_pairs_tsv(&dir.path().join("pairs.tsv"), &common::word_pairs(300, 106));
    for run in ["run1", "run2"] {
        let synth = format!("{run}/synth");
        let out = format!("{run}/out");
        run_cli(
            &[
                "synth", "--pairs", "pairs.tsv", "--out", &synth, "--synth-mode", "PERTURBED", "--bias", "0.05",
                "--sigma", "0.1", "--seed", "42",
            ],
            dir.path(),
        )?;
        let records = format!("{synth}/records.jsonl");
        run_cli(&["test", "--records", &records, "--out", &out], dir.path())?;
        run_cli(&["entropy", "--records", &records, "--out", &out, "--tolerance", "1e-4"], dir.path())?;
    }
    let files = [
        "synth/records.jsonl",
        "synth/models.jsonl",
        "synth/datasets.jsonl",
        "out/report.json",
        "out/report.csv",
        "out/boxplot.csv",
        "out/entropy.csv",
        "out/orders.jsonl",
    ];
    for f in files {
        let a = fs::read(dir.path().join("run1").join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = fs::read(dir.path().join("run2").join(f)).map_err(|e| format!("{f}: {e}"))?;
        ensure(a == b, || format!("{f} differs between runs"))?;
    }
    Ok(format!("{} output files byte-identical", files.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("toy fixture discrepancy and PMI identity", toy_fixture),
        ("oracle consistency through the CLI", oracle_consistency),
        ("signed-rank exact p vs enumeration", wilcoxon_exactness),
        ("signed-rank power and level", wilcoxon_power_and_level),
        ("Benjamini-Yekutieli correction", by_correction),
        ("OLS exact recovery and orthogonality", ols_recovery),
        ("regression table structure", table_structure),
        ("entropy orders and correlations", entropy_and_order),
        ("record round trip and line numbers", round_trip),
        ("end-to-end determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
