//! Output rendering: CSV tables, JSON summaries, ensemble snapshots, and
//! the atomic writes behind them. All numeric output uses full-precision
//! scientific notation with a '.' decimal separator and LF line endings so
//! reruns are byte-comparable across platforms and locales.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::ensemble::HybridEnsemble;
use crate::error::Result;

/// Hex digest of raw bytes; used to stamp outputs with the exact
/// configuration they came from.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").expect("string formatting does not fail");
    }
    out
}

/// Write-then-rename so readers never observe a half-written file. The
/// temporary sibling carries the pid to keep concurrent processes apart.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp_name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_else(|| "output".into());
    tmp_name.push(format!(".tmp.{}", std::process::id()));
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    fs::write(&tmp, bytes)?;
    match fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e.into())
        }
    }
}

/// A data table with key/value metadata lines.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str("# ");
            out.push_str(k);
            out.push_str(": ");
            out.push_str(v);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v:.16e}").expect("string formatting does not fail");
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// One named pass/fail criterion with the measured value and its bound.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Pass when the value stays at or below the threshold.
    pub fn upper(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            pass: value.is_finite() && value <= threshold,
        }
    }

    /// Pass when the value stays at or above the threshold.
    pub fn lower(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            threshold,
            pass: value.is_finite() && value >= threshold,
        }
    }
}

/// Machine-readable run summary printed to stdout and optionally written
/// alongside the data files.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    pub params_digest: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("summary serialization is infallible");
        text.push('\n');
        text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// Columnar dump of an ensemble: one row per member holding the weight, the
/// classical coordinates, and the quantum quadratures.
pub fn render_snapshot(ensemble: &HybridEnsemble) -> String {
    let (n_cl, n_qm) = (ensemble.n_cl(), ensemble.n_qm());
    let mut table = CsvTable::new(&[]);
    table.meta("n_cl", n_cl);
    table.meta("n_qm", n_qm);
    table.meta("members", ensemble.len());
    table.meta("seed", ensemble.seed());
    let mut columns = vec!["weight".to_string()];
    for k in 0..n_cl {
        columns.push(format!("x{k}"));
    }
    for k in 0..n_cl {
        columns.push(format!("p{k}"));
    }
    for k in 0..n_qm {
        columns.push(format!("X{k}"));
    }
    for k in 0..n_qm {
        columns.push(format!("P{k}"));
    }
    table.columns = columns;
    for (w, pt) in ensemble.members() {
        let mut row = Vec::with_capacity(1 + 2 * n_cl + 2 * n_qm);
        row.push(*w);
        row.extend(pt.cl.x.iter().copied());
        row.extend(pt.cl.p.iter().copied());
        row.extend(pt.qm.x.iter().copied());
        row.extend(pt.qm.p.iter().copied());
        table.push_row(row);
    }
    table.render()
}

pub fn write_snapshot(path: &Path, ensemble: &HybridEnsemble) -> Result<()> {
    write_atomic(path, render_snapshot(ensemble).as_bytes())
}
