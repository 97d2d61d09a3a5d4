//! Report rows, the run manifest, and CSV/JSON emission.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::params::{Format, Parameters};

/// `value` units per command.
pub const UNITS_LIMIT: &str = "m*";
pub const UNITS_SCALED: &str = "r_n*P*";
pub const UNITS_PROBABILITY: &str = "P*";

pub const STATUS_OK: &str = "ok";
pub const STATUS_RESOURCE: &str = "resource-error";

pub const PASS: &str = "PASS";
pub const FAIL: &str = "FAIL";
pub const TREND: &str = "TREND";

/// One report line. Columns that do not apply to a command are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub command: String,
    pub n: Option<usize>,
    pub event: String,
    /// Provenance of `value`: `series`, `quadrature`, `sbj`, `naive` or `exact`.
    pub method: String,
    pub units: String,
    pub sum_start: Option<usize>,
    /// `inverse-survival` for (1 - p_e)^(-1), `remark` for (1 - p_e).
    pub normalization: Option<String>,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub truncation_bound: Option<f64>,
    pub terms_used: Option<usize>,
    pub replicates: Option<u64>,
    pub seed: Option<u64>,
    pub limit: Option<f64>,
    pub abs_error: Option<f64>,
    pub verdict: Option<String>,
    /// `|estimate - limit|` nonincreasing over the n-grid up to this row.
    pub monotone: Option<bool>,
    pub status: String,
}

impl Row {
    pub fn new(command: &str, event: String, method: &str, units: &str) -> Self {
        Row {
            command: command.to_string(),
            n: None,
            event,
            method: method.to_string(),
            units: units.to_string(),
            sum_start: None,
            normalization: None,
            value: None,
            stderr: None,
            truncation_bound: None,
            terms_used: None,
            replicates: None,
            seed: None,
            limit: None,
            abs_error: None,
            verdict: None,
            monotone: None,
            status: STATUS_OK.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub n: usize,
    pub event: String,
    pub method: String,
    pub seconds: f64,
}

/// Everything needed to rerun a report: pass the manifest back with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub timestamp_unix: u64,
    pub parameters: Parameters,
    /// False when a resource limit stopped the run early.
    pub complete: bool,
    pub timings: Vec<Timing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub manifest: Manifest,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.verdict.as_deref() == Some(FAIL)).count()
    }
}

pub fn to_csv(rows: &[Row]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    // the header is written by hand so an empty table still has one
    w.write_record(csv_header())?;
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

pub fn from_csv(bytes: &[u8]) -> Result<Vec<Row>, CliError> {
    let mut r = csv::Reader::from_reader(bytes);
    Ok(r.deserialize().collect::<Result<Vec<Row>, _>>()?)
}

fn csv_header() -> [&'static str; 18] {
    [
        "command",
        "n",
        "event",
        "method",
        "units",
        "sum_start",
        "normalization",
        "value",
        "stderr",
        "truncation_bound",
        "terms_used",
        "replicates",
        "seed",
        "limit",
        "abs_error",
        "verdict",
        "monotone",
        "status",
    ]
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// CSV goes to `out` with the manifest beside it; JSON embeds the manifest.
/// Without `out`, the table goes to stdout.
pub fn emit(report: &Report, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let body = match format {
        Format::Csv => to_csv(&report.rows)?,
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(report)?;
            v.push(b'\n');
            v
        }
    };
    match out {
        Some(path) => {
            std::fs::write(path, &body)?;
            if format == Format::Csv {
                let mut m = serde_json::to_vec_pretty(&report.manifest)?;
                m.push(b'\n');
                std::fs::write(manifest_path(path), m)?;
            }
        }
        None => std::io::stdout().lock().write_all(&body)?,
    }
    Ok(())
}
