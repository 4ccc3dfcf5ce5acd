//! JSON run reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::PRReport;
use crate::pipeline::Stage;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub params: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputInfo>,
    pub stages: Vec<Stage>,
    pub results: Results,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputInfo {
    pub path: String,
    pub sha256: String,
    pub points: usize,
}

impl InputInfo {
    pub fn new(path: &Path, bytes: &[u8], points: usize) -> Self {
        Self {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            points,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeamEntry {
    pub a: usize,
    pub b: usize,
    pub coverage: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Results {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corners: Option<Vec<[f64; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seams: Option<Vec<SeamEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pr: Option<PRReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<PRReport>>,
}

impl Report {
    pub fn new(command: &str, params: BTreeMap<String, Value>) -> Self {
        Self {
            schema: SCHEMA,
            command: command.to_string(),
            params,
            input: None,
            stages: Vec::new(),
            results: Results::default(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes to `path`, or to stdout when `path` is `None`.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        let json = self.to_json();
        match path {
            Some(p) => fs::write(p, json).map_err(|e| Error::io(p, e)),
            None => {
                print!("{json}");
                Ok(())
            }
        }
    }
}

/// Corner positions from a report's `results.corners`.
pub fn corners_from_report(path: &Path) -> Result<Vec<[f64; 3]>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    let corners = value
        .pointer("/results/corners")
        .ok_or_else(|| Error::parse(path, 1, "report has no results.corners"))?;
    serde_json::from_value(corners.clone()).map_err(|e| Error::parse(path, 1, format!("results.corners: {e}")))
}
