//! CSV and JSON rendering of command results.

use std::fmt::Write;

use serde::Serialize;

use pulsecorr::analysis::{AnalysisRow, SweepAxis, SweepRow};
use pulsecorr::correlate::OracleResult;

pub const ANALYZE_COLUMNS: &str = "estimator,value,stderr,normalization,N,M,R_I,coincidences,singles_a,singles_b,reason";

/// Flat view of one estimator row. `None` marks an undefined field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub estimator: String,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub normalization: Option<String>,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "R_I")]
    pub r_i: f64,
    pub coincidences: Option<u64>,
    pub singles_a: Option<u64>,
    pub singles_b: Option<u64>,
    pub reason: Option<String>,
}

impl From<&AnalysisRow> for EstimateRecord {
    fn from(row: &AnalysisRow) -> Self {
        let mut rec = EstimateRecord {
            estimator: row.estimator.clone(),
            value: None,
            stderr: None,
            normalization: None,
            n: row.window_count,
            m: row.on_count,
            r_i: row.intensity_ratio,
            coincidences: None,
            singles_a: None,
            singles_b: None,
            reason: None,
        };
        match &row.result {
            Ok(est) if est.value.is_finite() => {
                rec.value = Some(est.value);
                rec.stderr = est.stderr;
                rec.normalization = Some(est.normalization.label());
                rec.coincidences = Some(est.counts.coincidences);
                rec.singles_a = est.counts.singles.first().copied();
                rec.singles_b = est.counts.singles.get(1).copied();
            }
            Ok(est) => rec.reason = Some(format!("non-finite value {}", est.value)),
            Err(e) => rec.reason = Some(e.to_string()),
        }
        rec
    }
}

fn na<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// Quotes a CSV field when it contains a delimiter, quote or newline.
fn field(text: &str) -> String {
    if text.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub fn analyze_csv(records: &[EstimateRecord]) -> String {
    let mut out = String::new();
    out.push_str(ANALYZE_COLUMNS);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            field(&r.estimator),
            na(r.value),
            na(r.stderr),
            field(&na(r.normalization.clone())),
            r.n,
            r.m,
            r.r_i,
            na(r.coincidences),
            na(r.singles_a),
            na(r.singles_b),
            field(r.reason.as_deref().unwrap_or("")),
        );
    }
    out
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    text
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub axis: &'static str,
    pub axis_value: f64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "R_I")]
    pub r_i: f64,
    pub estimates: Vec<EstimateRecord>,
}

pub fn sweep_records(axis: SweepAxis, rows: &[SweepRow]) -> Vec<SweepRecord> {
    rows.iter()
        .map(|row| {
            let estimates: Vec<EstimateRecord> = row.rows.iter().map(EstimateRecord::from).collect();
            let (n, m, r_i) = row
                .rows
                .first()
                .map_or((0, 0, 0.0), |r| (r.window_count, r.on_count, r.intensity_ratio));
            SweepRecord {
                axis: axis.name(),
                axis_value: row.axis_value,
                n,
                m,
                r_i,
                estimates,
            }
        })
        .collect()
}

/// One line per axis value: the axis value, N, M, R_I, then a value and a
/// stderr column per estimator.
pub fn sweep_csv(axis: SweepAxis, records: &[SweepRecord]) -> String {
    let names: Vec<&str> = records
        .first()
        .map(|r| r.estimates.iter().map(|e| e.estimator.as_str()).collect())
        .unwrap_or_default();
    let mut out = format!("{},N,M,R_I", axis.name());
    for name in &names {
        let _ = write!(out, ",{name},{name}_stderr");
    }
    out.push('\n');
    for r in records {
        let _ = write!(out, "{},{},{},{}", r.axis_value, r.n, r.m, r.r_i);
        for name in &names {
            let est = r.estimates.iter().find(|e| e.estimator == *name);
            let _ = write!(
                out,
                ",{},{}",
                na(est.and_then(|e| e.value)),
                na(est.and_then(|e| e.stderr))
            );
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRecord {
    pub source: &'static str,
    pub mean: f64,
    pub port_probs: Vec<f64>,
    pub efficiencies: Vec<f64>,
    #[serde(flatten)]
    pub result: OracleResult,
}

pub fn oracle_csv(record: &OracleRecord) -> String {
    let mut out = String::from("quantity,value\n");
    let r = &record.result;
    for (j, p) in r.click_probs.iter().enumerate() {
        let _ = writeln!(out, "click_prob_{j},{p}");
    }
    for j in 0..r.coincidence_probs.len() {
        for k in j + 1..r.coincidence_probs.len() {
            let _ = writeln!(out, "coincidence_prob_{j}_{k},{}", r.coincidence_probs[j][k]);
        }
    }
    let _ = writeln!(out, "g2_click,{}", na(r.g2_click));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub seed: u64,
    pub fingerprint: String,
    pub mode: String,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "R_I")]
    pub r_i: f64,
    pub pulses: u64,
    pub detectors: Vec<String>,
    pub click_counts: Vec<u64>,
    pub timetags: String,
    pub resolution_ps: u64,
    pub records: usize,
    pub bytes: usize,
}
