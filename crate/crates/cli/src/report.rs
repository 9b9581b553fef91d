//! Machine-readable experiment reports.
//!
//! Reports are fully deterministic for a fixed spec and seed except for
//! the recorded wall-times. JSON uses struct field order; CSV output
//! splits into a per-cell file and an `.aggregates.csv` sibling.

use std::path::{Path, PathBuf};

use mctree::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::spec::{AlgorithmId, ExperimentSpec, ReportFormat};

pub const REPORT_SCHEMA: &str = "report/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub environment: EnvironmentStamp,
    pub spec: ExperimentSpec,
    /// Original label strings for CSV sources.
    pub label_names: Option<Vec<String>>,
    pub warnings: Vec<String>,
    pub groups: Vec<GroupReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentStamp {
    pub seed: u64,
    pub version: String,
    /// How times were measured.
    pub timing: String,
}

impl EnvironmentStamp {
    pub fn new(seed: u64) -> Self {
        EnvironmentStamp {
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timing: "wall-clock seconds around tree construction only; every build is \
                     single-threaded"
                .to_string(),
        }
    }
}

/// One evaluated configuration (one synthetic training size, or the
/// whole CV/holdout run for CSV sources).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub id: String,
    pub cells: Vec<CellReport>,
    pub aggregates: Vec<AggregateRow>,
    pub significance: Option<SignificanceReport>,
}

/// One (dataset instance, algorithm, scaling) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub dataset: String,
    pub algorithm: AlgorithmId,
    pub scaled: bool,
    pub accuracy: Option<f64>,
    pub build_seconds: Option<f64>,
    pub leaves: Option<usize>,
    pub depth: Option<usize>,
    /// Set when the cell failed; the metric fields are then empty.
    pub error: Option<String>,
}

/// The `//` (statistically best) and `\\` (statistically not best)
/// markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Marking {
    #[serde(rename = "//")]
    Best,
    #[serde(rename = "\\\\")]
    Worse,
    #[serde(rename = "")]
    None,
}

impl Marking {
    pub fn symbol(&self) -> &'static str {
        match self {
            Marking::Best => "//",
            Marking::Worse => "\\\\",
            Marking::None => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algorithm: AlgorithmId,
    /// The reported variant (the Scaled column of the results table).
    pub scaled: bool,
    pub datasets: usize,
    pub mean_accuracy: f64,
    pub ci95: Option<[f64; 2]>,
    pub mean_build_seconds: f64,
    pub mean_leaves: f64,
    pub mean_depth: f64,
    pub marking: Marking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTestRow {
    /// The comparison algorithm.
    pub algorithm: AlgorithmId,
    /// t statistic; omitted when degenerate (zero spread).
    pub t: Option<f64>,
    pub p: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReverseBlock {
    pub algorithm: AlgorithmId,
    /// One-tailed tests that `algorithm` performs worse than each other
    /// algorithm, Holm-Bonferroni corrected.
    pub tests: Vec<PairedTestRow>,
    pub any_rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub alpha: f64,
    pub top_algorithm: AlgorithmId,
    /// One-tailed tests that the top algorithm outperforms each other
    /// algorithm, Holm-Bonferroni corrected.
    pub forward: Vec<PairedTestRow>,
    pub all_forward_rejected: bool,
    pub reverse: Vec<ReverseBlock>,
}

/// Writes a report in the requested format. CSV writes the cells to
/// `path` and the aggregates to a `<stem>.aggregates.csv` sibling.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<()> {
    match format {
        ReportFormat::Json => {
            let text = serde_json::to_string_pretty(report)?;
            std::fs::write(path, text + "\n")?;
        }
        ReportFormat::Csv => {
            write_cells_csv(report, path)?;
            write_aggregates_csv(report, &aggregates_path(path))?;
        }
    }
    Ok(())
}

pub fn aggregates_path(cells_path: &Path) -> PathBuf {
    cells_path.with_extension("aggregates.csv")
}

fn write_cells_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "group",
        "dataset",
        "algorithm",
        "scaled",
        "accuracy",
        "build_seconds",
        "leaves",
        "depth",
        "error",
    ])?;
    for group in &report.groups {
        for cell in &group.cells {
            w.write_record([
                group.id.clone(),
                cell.dataset.clone(),
                cell.algorithm.key().to_string(),
                cell.scaled.to_string(),
                opt(cell.accuracy),
                opt(cell.build_seconds),
                opt(cell.leaves),
                opt(cell.depth),
                cell.error.clone().unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_aggregates_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "group",
        "algorithm",
        "scaled",
        "datasets",
        "mean_accuracy",
        "ci95_low",
        "ci95_high",
        "mean_build_seconds",
        "mean_leaves",
        "mean_depth",
        "marking",
    ])?;
    for group in &report.groups {
        for row in &group.aggregates {
            w.write_record([
                group.id.clone(),
                row.algorithm.key().to_string(),
                row.scaled.to_string(),
                row.datasets.to_string(),
                row.mean_accuracy.to_string(),
                opt(row.ci95.map(|ci| ci[0])),
                opt(row.ci95.map(|ci| ci[1])),
                row.mean_build_seconds.to_string(),
                row.mean_leaves.to_string(),
                row.mean_depth.to_string(),
                row.marking.symbol().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Parses a JSON report, checking the schema tag.
pub fn report_from_json(text: &str) -> Result<ExperimentReport> {
    let report: ExperimentReport = serde_json::from_str(text)?;
    if report.schema != REPORT_SCHEMA {
        return Err(Error::Format(format!(
            "unsupported report schema {:?}, expected {REPORT_SCHEMA:?}",
            report.schema
        )));
    }
    Ok(report)
}
