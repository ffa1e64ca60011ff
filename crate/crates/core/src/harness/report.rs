//! Report records and their JSON/CSV serialisation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mc::EstimateWithCI;

use super::windows::Window;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Hypotheses hold but an input quantity could not be computed.
    NotEvaluated,
    /// The instance violates the check's hypotheses.
    Skipped,
    /// Ratio recorded for window calibration, nothing asserted.
    Calibration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    /// Grid point such as `t=5` for checks evaluated at several times.
    pub at: Option<String>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Ratio range after moving each Monte Carlo input by 3 standard errors.
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    pub two_sided: bool,
    pub window: Option<Window>,
    pub status: CheckStatus,
    /// Quantity-map keys the check was computed from.
    pub inputs: Vec<String>,
    pub reason: Option<String>,
}

impl CheckRecord {
    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub samples: u64,
    pub moment_samples: u64,
    pub estimates: BTreeMap<String, EstimateWithCI>,
    pub notes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub schema_version: u32,
    pub instance: String,
    pub quantities: BTreeMap<String, f64>,
    pub checks: Vec<CheckRecord>,
    pub provenance: Provenance,
}

impl TheoremReport {
    pub fn check(&self, id: &str) -> impl Iterator<Item = &CheckRecord> + '_ {
        let id = id.to_string();
        self.checks.iter().filter(move |c| c.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> + '_ {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

/// 1 when any evaluated check failed, else 0.
pub fn exit_status(reports: &[TheoremReport]) -> i32 {
    i32::from(reports.iter().any(|r| r.failures().next().is_some()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
    Both,
}

pub fn reports_to_json(reports: &[TheoremReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)? + "\n")
}

pub fn reports_to_csv(reports: &[TheoremReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "instance", "check", "at", "lhs", "rhs", "ratio", "ratio_lo", "ratio_hi", "status", "pass",
    ])?;
    for r in reports {
        for c in &r.checks {
            w.write_record([
                r.instance.as_str(),
                c.id.as_str(),
                c.at.as_deref().unwrap_or(""),
                &c.lhs.to_string(),
                &c.rhs.to_string(),
                &c.ratio.to_string(),
                &c.ratio_lo.to_string(),
                &c.ratio_hi.to_string(),
                serde_json::to_value(c.status)?.as_str().unwrap_or_default(),
                if c.passed() { "true" } else { "false" },
            ])?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `reports.json` and/or `reports.csv` under `dir` and returns the
/// written paths together with the exit status.
pub fn emit_report(
    reports: &[TheoremReport],
    dir: &Path,
    format: ReportFormat,
) -> Result<(Vec<PathBuf>, i32)> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, ReportFormat::Json | ReportFormat::Both) {
        let path = dir.join("reports.json");
        fs::write(&path, reports_to_json(reports)?)?;
        written.push(path);
    }
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        let path = dir.join("reports.csv");
        fs::write(&path, reports_to_csv(reports)?)?;
        written.push(path);
    }
    Ok((written, exit_status(reports)))
}
