//! Versioned report rows, the run manifest and tidy plot tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use plausible_core::metrics::{Histogram, RiskSummary};
use plausible_core::Provenance;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

pub const CASE_REPORT: &str = "case_report.jsonl";
pub const DATASET_REPORT: &str = "dataset_report.jsonl";
pub const PLOT_DATA: &str = "plot_data.csv";
pub const MANIFEST: &str = "manifest.json";
pub const FAILURES: &str = "failures.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportRow {
    Aggregate {
        schema_version: u32,
        case_id: String,
        provenance: Provenance,
        mean: Vec<f64>,
        sd: Vec<f64>,
        irn_top1: Option<usize>,
        loo_agreement: Option<f64>,
    },
    Certainty {
        schema_version: u32,
        case_id: String,
        provenance: Provenance,
        top_j: usize,
        certainty: f64,
    },
    Risk {
        schema_version: u32,
        case_id: String,
        provenance: Provenance,
        summary: RiskSummary,
    },
    CaseMetric {
        schema_version: u32,
        case_id: String,
        classifier: String,
        provenance: Provenance,
        metric: String,
        k: usize,
        value: f64,
    },
    DatasetMetric {
        schema_version: u32,
        classifier: Option<String>,
        provenance: Provenance,
        metric: String,
        k: usize,
        num_cases: usize,
        mean: f64,
        sample_sd: Option<f64>,
        sample_min: Option<f64>,
        sample_max: Option<f64>,
        histogram: Option<Histogram>,
    },
}

impl ReportRow {
    pub fn provenance(&self) -> &Provenance {
        match self {
            ReportRow::Aggregate { provenance, .. }
            | ReportRow::Certainty { provenance, .. }
            | ReportRow::Risk { provenance, .. }
            | ReportRow::CaseMetric { provenance, .. }
            | ReportRow::DatasetMetric { provenance, .. } => provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub case_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub tool_version: String,
    pub config: RunConfig,
    pub num_cases: usize,
    pub failed_cases: Vec<String>,
    pub files: Vec<String>,
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut buf = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut buf, row).expect("report rows serialize");
        buf.push(b'\n');
    }
    fs::write(path, buf).map_err(CliError::io(path))
}

pub fn read_report(path: &Path) -> CliResult<Vec<ReportRow>> {
    Ok(crate::ingest::read_jsonl(path)?
        .into_iter()
        .map(|(_, row)| row)
        .collect())
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

/// One row per number: dataset summaries and case-level values side by side.
pub fn write_plot_data(path: &Path, rows: &[ReportRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "scope",
        "case_id",
        "classifier",
        "model",
        "reliability",
        "metric",
        "k",
        "value",
        "sd",
    ];
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        let p = row.provenance();
        let (model, rel) = (p.model.to_string(), p.reliability.to_string());
        let record: Option<[String; 9]> = match row {
            ReportRow::Certainty {
                case_id,
                top_j,
                certainty,
                ..
            } => Some([
                "case".into(),
                case_id.clone(),
                String::new(),
                model,
                rel,
                "certainty".into(),
                top_j.to_string(),
                certainty.to_string(),
                String::new(),
            ]),
            ReportRow::CaseMetric {
                case_id,
                classifier,
                metric,
                k,
                value,
                ..
            } => Some([
                "case".into(),
                case_id.clone(),
                classifier.clone(),
                model,
                rel,
                metric.clone(),
                k.to_string(),
                value.to_string(),
                String::new(),
            ]),
            ReportRow::DatasetMetric {
                classifier,
                metric,
                k,
                mean,
                sample_sd,
                ..
            } => Some([
                "dataset".into(),
                String::new(),
                classifier.clone().unwrap_or_default(),
                model,
                rel,
                metric.clone(),
                k.to_string(),
                mean.to_string(),
                sample_sd.map(|s| s.to_string()).unwrap_or_default(),
            ]),
            ReportRow::Aggregate { .. } | ReportRow::Risk { .. } => None,
        };
        if let Some(record) = record {
            w.write_record(&record).map_err(csv_err(path))?;
        }
    }
    let bytes = w.into_inner().expect("in-memory csv writer flushes");
    let mut file = fs::File::create(path).map_err(CliError::io(path))?;
    file.write_all(&bytes).map_err(CliError::io(path))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}
