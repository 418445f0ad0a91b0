//! Artifact plumbing: CSV schemas, matrix JSON, the experiment manifest and
//! its configuration hash.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use quditforge_core::{CMat, CVec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Aggregate schema shared by every optimization experiment.
pub const AGGREGATE_HEADER: [&str; 9] = [
    "d",
    "target",
    "ansatz",
    "B_or_order",
    "start",
    "seed",
    "infidelity",
    "leakage",
    "wall_time",
];

pub const NOISE_HEADER: [&str; 4] = ["ansatz", "beta", "sample", "infidelity"];

pub const BUDGET_HEADER: [&str; 5] = [
    "ansatz",
    "block_time_us",
    "blocks",
    "t1_budget_us",
    "max_gates",
];

pub const BREAK_EVEN_HEADER: [&str; 3] = ["t_snap_us", "t_ecd_us", "break_even_dimension"];

pub const SUMMARY_HEADER: [&str; 8] = [
    "d",
    "target",
    "ansatz",
    "B_or_order",
    "count",
    "min_infidelity",
    "median_infidelity",
    "max_infidelity",
];

/// Twelve significant digits; every float column uses this form.
pub fn fmt_e(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write a CSV file with RFC-4180 quoting (target labels contain commas).
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Render rows as one CSV string (for stdout output).
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().context("flushing CSV buffer")?;
    Ok(String::from_utf8(bytes)?)
}

/// Read a CSV produced by [`write_csv`] back as (header, string rows).
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let header = r
        .headers()?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for record in r.records() {
        rows.push(record?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

pub fn column_index(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .with_context(|| format!("input has no '{name}' column"))
}

/// `{"dim": n, "re": [[..]], "im": [[..]]}`; states are n x 1 columns.
pub fn matrix_json(m: &CMat) -> serde_json::Value {
    let re: Vec<Vec<f64>> = m.rows().into_iter().map(|r| r.iter().map(|z| z.re).collect()).collect();
    let im: Vec<Vec<f64>> = m.rows().into_iter().map(|r| r.iter().map(|z| z.im).collect()).collect();
    serde_json::json!({ "dim": m.nrows(), "re": re, "im": im })
}

pub fn state_json(v: &CVec) -> serde_json::Value {
    let re: Vec<Vec<f64>> = v.iter().map(|z| vec![z.re]).collect();
    let im: Vec<Vec<f64>> = v.iter().map(|z| vec![z.im]).collect();
    serde_json::json!({ "dim": v.len(), "re": re, "im": im })
}

/// One run that errored; the batch records it and moves on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunFailure {
    pub index: usize,
    pub label: String,
    pub error: String,
}

/// Everything needed to reproduce an experiment bit-exactly: the resolved
/// configuration, the seed, and a hash tying the outputs to both.  Feeding a
/// manifest back through `--config` reruns the identical batch.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub seed: u64,
    pub threads: usize,
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub n_rows: usize,
    pub failures: Vec<RunFailure>,
    pub wall_time_s: f64,
}

/// Hash of (experiment, seed, resolved config); field order is fixed by the
/// serialized struct, so equal setups hash equally.
pub fn config_hash(experiment: &str, seed: u64, config: &serde_json::Value) -> String {
    let body = format!("{experiment}\n{seed}\n{config}");
    sha256_hex(body.as_bytes())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, format!("{value:#}\n"))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
