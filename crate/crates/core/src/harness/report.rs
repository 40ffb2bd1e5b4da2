use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

use super::config::ExperimentConfig;

/// Pass/fail of one certificate with its measured constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub tag: String,
    pub pass: bool,
    pub constant: f64,
}

impl CertificateRecord {
    pub fn new(tag: impl Into<String>, pass: bool, constant: f64) -> Self {
        Self {
            tag: tag.into(),
            pass,
            constant,
        }
    }
}

/// Column names plus rows, written as CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|x| x.to_string()).collect());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The JSON report. Measured constants and fixed thresholds live in
/// separate sections; the wall-clock timestamp is the only field that
/// differs between reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: String,
    pub config: ExperimentConfig,
    pub measured: Value,
    pub thresholds: Value,
    pub certificates: Vec<CertificateRecord>,
    pub all_pass: bool,
    pub timestamp: u64,
}

impl Report {
    pub fn new(
        config: &ExperimentConfig,
        measured: Value,
        thresholds: Value,
        certificates: Vec<CertificateRecord>,
    ) -> Self {
        let all_pass = certificates.iter().all(|c| c.pass);
        Self {
            kind: config.kind.name().to_string(),
            config: config.clone(),
            measured,
            thresholds,
            certificates,
            all_pass,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn failing_tags(&self) -> Vec<&str> {
        self.certificates
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.tag.as_str())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

/// Report text with the timestamp removed, for rerun comparisons.
pub fn strip_timestamp(json: &str) -> Result<String> {
    let mut v: Value = serde_json::from_str(json)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("timestamp");
    }
    Ok(serde_json::to_string_pretty(&v)?)
}
