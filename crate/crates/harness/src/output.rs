//! Result tables as CSV or JSON, numbers at 9 significant digits.

use std::path::Path;

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::experiment::{OutputFormat, ResultRow};

/// `x` with 9 significant digits; `nan`, `inf` and `-inf` for non-finite values.
pub fn sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..9).contains(&exp) {
        format!("{:.*}", (8 - exp).max(0) as usize, x)
    } else {
        format!("{x:.8e}")
    }
}

/// `x` rounded to 9 significant digits; non-finite values become `None`.
pub fn round9(x: f64) -> Option<f64> {
    x.is_finite().then(|| sig9(x).parse().unwrap_or(x))
}

pub const CSV_HEADER: [&str; 16] = [
    "scheme",
    "sweepVar",
    "sweepValue",
    "trial_count",
    "infeasible_count",
    "covert_rate_mean",
    "covert_rate_std",
    "overt_rate_min_mean",
    "pE_mean",
    "kl_mean",
    "sensing_sinr_db_mean",
    "pd_mean",
    "pfa",
    "runtime_ms_mean",
    "audit_min_slack",
    "audit_verdict",
];

fn csv_record(r: &ResultRow) -> Vec<String> {
    vec![
        r.scheme.clone(),
        r.sweep_var.clone(),
        sig9(r.sweep_value),
        r.trial_count.to_string(),
        r.infeasible_count.to_string(),
        sig9(r.covert_rate_mean),
        sig9(r.covert_rate_std),
        sig9(r.overt_rate_min_mean),
        sig9(r.p_e_mean),
        sig9(r.kl_mean),
        sig9(r.sensing_sinr_db_mean),
        sig9(r.pd_mean),
        sig9(r.pfa),
        r.runtime_ms_mean.map(sig9).unwrap_or_default(),
        sig9(r.audit_min_slack),
        r.audit_verdict.clone(),
    ]
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io { path: path.display().to_string(), reason: e.to_string() }
}

pub fn to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let conv = |e: csv::Error| HarnessError::Config(e.to_string());
    w.write_record(CSV_HEADER).map_err(conv)?;
    for r in rows {
        w.write_record(csv_record(r)).map_err(conv)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[derive(Serialize)]
struct JsonRow<'a> {
    scheme: &'a str,
    #[serde(rename = "sweepVar")]
    sweep_var: &'a str,
    #[serde(rename = "sweepValue")]
    sweep_value: Option<f64>,
    trial_count: usize,
    infeasible_count: usize,
    covert_rate_mean: Option<f64>,
    covert_rate_std: Option<f64>,
    overt_rate_min_mean: Option<f64>,
    #[serde(rename = "pE_mean")]
    p_e_mean: Option<f64>,
    kl_mean: Option<f64>,
    sensing_sinr_db_mean: Option<f64>,
    pd_mean: Option<f64>,
    pfa: Option<f64>,
    runtime_ms_mean: Option<f64>,
    audit_min_slack: Option<f64>,
    audit_verdict: &'a str,
}

pub fn to_json(rows: &[ResultRow]) -> Result<String> {
    let out: Vec<JsonRow> = rows
        .iter()
        .map(|r| JsonRow {
            scheme: &r.scheme,
            sweep_var: &r.sweep_var,
            sweep_value: round9(r.sweep_value),
            trial_count: r.trial_count,
            infeasible_count: r.infeasible_count,
            covert_rate_mean: round9(r.covert_rate_mean),
            covert_rate_std: round9(r.covert_rate_std),
            overt_rate_min_mean: round9(r.overt_rate_min_mean),
            p_e_mean: round9(r.p_e_mean),
            kl_mean: round9(r.kl_mean),
            sensing_sinr_db_mean: round9(r.sensing_sinr_db_mean),
            pd_mean: round9(r.pd_mean),
            pfa: round9(r.pfa),
            runtime_ms_mean: r.runtime_ms_mean.and_then(round9),
            audit_min_slack: round9(r.audit_min_slack),
            audit_verdict: &r.audit_verdict,
        })
        .collect();
    serde_json::to_string_pretty(&out).map_err(|e| HarnessError::Config(e.to_string()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(path, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_rows(rows: &[ResultRow], path: &Path, format: OutputFormat) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => to_csv(rows)?,
        OutputFormat::Json => to_json(rows)? + "\n",
    };
    write_text(path, &text)
}
