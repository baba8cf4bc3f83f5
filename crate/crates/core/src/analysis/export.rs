//! JSON and CSV renderings of analysis results. Floats are written with 17
//! significant digits so files round-trip exactly and diff byte-for-byte.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{
    cell_discrepancies, Cell, ComprehensionSummary, EntropyCorrelationTable, OrderRecommendation, TestReport,
};
use crate::records::format_f64;
use crate::stats::{quantile_sorted, RegressionFit};

pub const REPORT_COLUMNS: [&str; 9] = [
    "model_id",
    "dataset_id",
    "n_pairs",
    "median_d",
    "variance_d",
    "t_statistic",
    "p_raw",
    "p_adjusted",
    "rejected",
];

fn opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

pub fn write_report_json<W: Write>(mut w: W, report: &TestReport) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)
}

pub fn write_report_csv<W: Write>(w: W, report: &TestReport) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REPORT_COLUMNS).map_err(csv_err)?;
    for c in &report.cells {
        out.write_record([
            c.model_id.clone(),
            c.dataset_id.clone(),
            c.n_pairs.to_string(),
            format_f64(c.median_d),
            opt(c.variance_d),
            format_f64(c.wilcoxon.statistic_t),
            format_f64(c.wilcoxon.p_value),
            format_f64(c.p_adjusted),
            c.rejected.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()
}

/// Five-number summary of one cell's discrepancies with Tukey fences at
/// 1.5·IQR. Whiskers end at the most extreme values inside the fences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub model_id: String,
    pub dataset_id: String,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub n_outliers: usize,
}

pub fn boxplot_rows(cells: &[Cell<'_>], zero_tolerance: f64) -> Vec<BoxplotRow> {
    cells
        .iter()
        .filter(|(_, records)| !records.is_empty())
        .map(|(key, records)| {
            let mut d = cell_discrepancies(records, zero_tolerance);
            d.sort_by(f64::total_cmp);
            let q1 = quantile_sorted(&d, 0.25).unwrap();
            let q3 = quantile_sorted(&d, 0.75).unwrap();
            let iqr = q3 - q1;
            let lower_fence = q1 - 1.5 * iqr;
            let upper_fence = q3 + 1.5 * iqr;
            let inside: Vec<f64> = d
                .iter()
                .copied()
                .filter(|x| *x >= lower_fence && *x <= upper_fence)
                .collect();
            BoxplotRow {
                model_id: key.model_id.clone(),
                dataset_id: key.dataset_id.clone(),
                n: d.len(),
                min: d[0],
                q1,
                median: quantile_sorted(&d, 0.5).unwrap(),
                q3,
                max: d[d.len() - 1],
                lower_fence,
                upper_fence,
                // The quartiles always lie inside the fences, so `inside`
                // holds at least the values nearest them.
                whisker_low: inside[0],
                whisker_high: inside[inside.len() - 1],
                n_outliers: d.len() - inside.len(),
            }
        })
        .collect()
}

pub fn write_boxplot_csv<W: Write>(w: W, rows: &[BoxplotRow]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "model_id",
        "dataset_id",
        "n",
        "min",
        "q1",
        "median",
        "q3",
        "max",
        "lower_fence",
        "upper_fence",
        "whisker_low",
        "whisker_high",
        "n_outliers",
    ])
    .map_err(csv_err)?;
    for r in rows {
        let mut fields = vec![r.model_id.clone(), r.dataset_id.clone(), r.n.to_string()];
        fields.extend(
            [
                r.min,
                r.q1,
                r.median,
                r.q3,
                r.max,
                r.lower_fence,
                r.upper_fence,
                r.whisker_low,
                r.whisker_high,
            ]
            .map(format_f64),
        );
        fields.push(r.n_outliers.to_string());
        out.write_record(&fields).map_err(csv_err)?;
    }
    out.flush()
}

pub fn write_entropy_csv<W: Write>(w: W, table: &EntropyCorrelationTable) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "model_id",
        "dataset_id",
        "n_pairs",
        "kind",
        "corr_d_h_i",
        "corr_d_h_ip1_given_i",
        "corr_neg_d_h_ip1",
        "corr_neg_d_h_i_given_ip1",
        "constant_entropies",
        "skipped",
    ])
    .map_err(csv_err)?;
    for c in &table.cells {
        out.write_record([
            c.model_id.clone(),
            c.dataset_id.clone(),
            c.n_pairs.to_string(),
            table.kind.as_str().to_string(),
            opt(c.corr_d_h_i),
            opt(c.corr_d_h_ip1_given_i),
            opt(c.corr_neg_d_h_ip1),
            opt(c.corr_neg_d_h_i_given_ip1),
            c.constant_entropies.join(";"),
            c.skipped.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()
}

pub fn write_orders_jsonl<W: Write>(mut w: W, orders: &[OrderRecommendation]) -> io::Result<()> {
    for o in orders {
        writeln!(
            w,
            "{{\"record_id\":{},\"delta_h\":{},\"recommended_order\":\"{}\"}}",
            serde_json::to_string(&o.record_id)?,
            format_f64(o.delta_h),
            o.recommended_order.as_str()
        )?;
    }
    Ok(())
}

/// One row per coefficient, then footer rows `R²` and `n` carrying their
/// value in the `coeff` column.
pub fn write_regression_csv<W: Write>(w: W, fit: &RegressionFit) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["label", "coeff", "std_err", "p_value"]).map_err(csv_err)?;
    for (i, label) in fit.design_labels.iter().enumerate() {
        out.write_record([
            label.clone(),
            format_f64(fit.coefficients[i]),
            format_f64(fit.std_errors[i]),
            format_f64(fit.p_values[i]),
        ])
        .map_err(csv_err)?;
    }
    out.write_record(["R²".to_string(), format_f64(fit.r_squared), String::new(), String::new()])
        .map_err(csv_err)?;
    out.write_record(["n".to_string(), fit.n.to_string(), String::new(), String::new()])
        .map_err(csv_err)?;
    out.flush()
}

pub fn write_comprehension_csv<W: Write>(w: W, summary: &ComprehensionSummary) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["model_id".to_string(), "n_records".to_string(), "n_eos".to_string()];
    for group in ["rank1", "rank2", "log10_rank1", "log10_rank2", "eos_prob"] {
        for q in ["q1", "median", "q3"] {
            header.push(format!("{group}_{q}"));
        }
    }
    out.write_record(&header).map_err(csv_err)?;
    for m in &summary.models {
        let mut row = vec![m.model_id.clone(), m.n_records.to_string(), m.n_eos.to_string()];
        for q in [m.rank1, m.rank2, m.log10_rank1, m.log10_rank2] {
            row.extend([q.q1, q.median, q.q3].map(format_f64));
        }
        match m.eos_prob {
            Some(q) => row.extend([q.q1, q.median, q.q3].map(format_f64)),
            None => row.extend([String::new(), String::new(), String::new()]),
        }
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()
}
