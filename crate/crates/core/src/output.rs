//! Run manifests: what a command wrote, with checksums and a check summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

/// One line of a pass/fail summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckRow {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        CheckRow {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub scenario: Option<String>,
    pub parameters: BTreeMap<String, f64>,
    pub outputs: Vec<OutputFile>,
    pub checks: Vec<CheckRow>,
    pub passed: bool,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub info: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Numeric table rendered as CSV or JSON. Values use the shortest
/// representation that round-trips, so output is byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidParameter(format!("unknown format `{s}` (csv, json)"))),
        }
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:e}");
            }
            out.push('\n');
        }
        out
    }

    /// Non-finite values become `null`.
    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<Option<f64>>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| v.is_finite().then_some(*v)).collect())
            .collect();
        let v = serde_json::json!({ "columns": self.columns, "rows": rows });
        v.to_string() + "\n"
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

impl RunManifest {
    pub fn new(command: impl Into<String>, scenario: Option<&str>) -> Self {
        RunManifest {
            command: command.into(),
            scenario: scenario.map(str::to_string),
            parameters: BTreeMap::new(),
            outputs: Vec::new(),
            checks: Vec::new(),
            passed: true,
            wall_time_s: 0.0,
            info: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn check(&mut self, row: CheckRow) {
        self.passed &= row.passed;
        self.checks.push(row);
    }

    /// Writes `contents` to `dir/name` and records it.
    pub fn write_output(&mut self, dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.outputs.push(OutputFile {
            path: PathBuf::from(name),
            sha256: sha256_hex(contents),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    /// Writes the manifest itself as `dir/manifest.json`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Checks that every listed output exists under `dir` with its checksum.
    pub fn verify_outputs(&self, dir: &Path) -> Result<()> {
        for o in &self.outputs {
            let p = dir.join(&o.path);
            let bytes = fs::read(&p).map_err(|e| io_err(&p, e))?;
            if sha256_hex(&bytes) != o.sha256 {
                return Err(io_err(&p, std::io::Error::new(std::io::ErrorKind::InvalidData, "checksum mismatch")));
            }
        }
        Ok(())
    }
}
