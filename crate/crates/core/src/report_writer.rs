//! Serialization of a coverage report into the nine JSON report files:
//! `stats.json` plus one detail file per metric.
//!
//! Output is deterministic: fixed metric order in `stats.json`, paths
//! sorted lexicographically, methods in the fixed order
//! `get, post, put, delete, patch, head, options`, and numbers at full
//! precision. Files are written atomically (write-then-rename), so two
//! runs over identical inputs produce byte-identical reports.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::metrics_engine::{CoverageReport, DetailSet, MetricKind, MetricResult};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write report: {0}")]
    Write(String),
}

#[derive(Serialize)]
struct RawCounts {
    documented: usize,
    #[serde(rename = "documentedAndTested")]
    documented_and_tested: usize,
    #[serde(rename = "totalTested")]
    total_tested: usize,
}

#[derive(Serialize)]
struct MetricStats {
    raw: RawCounts,
    rate: f64,
}

impl MetricStats {
    fn of(result: &MetricResult) -> MetricStats {
        MetricStats {
            raw: RawCounts {
                documented: result.documented,
                documented_and_tested: result.documented_and_tested,
                total_tested: result.total_tested,
            },
            rate: result.rate(),
        }
    }
}

/// `stats.json` body; field order is the serialization order.
#[derive(Serialize)]
struct StatsDocument {
    #[serde(rename = "pathCoverage")]
    path: MetricStats,
    #[serde(rename = "operationCoverage")]
    operation: MetricStats,
    #[serde(rename = "parameterCoverage")]
    parameter: MetricStats,
    #[serde(rename = "parameterValueCoverage")]
    parameter_value: MetricStats,
    #[serde(rename = "requestContentTypeCoverage")]
    request_content_type: MetricStats,
    #[serde(rename = "statusCodeClassCoverage")]
    status_code_class: MetricStats,
    #[serde(rename = "statusCodeCoverage")]
    status_code: MetricStats,
    #[serde(rename = "responseContentTypeCoverage")]
    response_content_type: MetricStats,
    #[serde(rename = "TCL")]
    tcl: u8,
    #[serde(rename = "tclCapped")]
    tcl_capped: bool,
}

#[derive(Serialize)]
struct DetailDocument<'a> {
    #[serde(rename = "documentedAndTested")]
    documented_and_tested: &'a DetailSet,
    #[serde(rename = "documentedAndNotTested")]
    documented_and_not_tested: &'a DetailSet,
    #[serde(rename = "notDocumentedAndTested")]
    not_documented_and_tested: &'a DetailSet,
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), ReportError> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, contents)
        .map_err(|err| ReportError::Write(format!("{}: {err}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|err| ReportError::Write(format!("{}: {err}", path.display())))?;
    Ok(())
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, ReportError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|err| ReportError::Write(err.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Write `stats.json` into `out_dir` and return its path.
pub fn write_stats_report(
    report: &CoverageReport,
    out_dir: &Path,
) -> Result<PathBuf, ReportError> {
    let document = StatsDocument {
        path: MetricStats::of(report.result(MetricKind::PathCoverage)),
        operation: MetricStats::of(report.result(MetricKind::OperationCoverage)),
        parameter: MetricStats::of(report.result(MetricKind::ParameterCoverage)),
        parameter_value: MetricStats::of(report.result(MetricKind::ParameterValueCoverage)),
        request_content_type: MetricStats::of(
            report.result(MetricKind::RequestContentTypeCoverage),
        ),
        status_code_class: MetricStats::of(report.result(MetricKind::StatusCodeClassCoverage)),
        status_code: MetricStats::of(report.result(MetricKind::StatusCodeCoverage)),
        response_content_type: MetricStats::of(
            report.result(MetricKind::ResponseContentTypeCoverage),
        ),
        tcl: report.tcl,
        tcl_capped: report.tcl_capped,
    };
    let path = out_dir.join("stats.json");
    write_atomic(&path, &to_pretty_json(&document)?)?;
    Ok(path)
}

/// Write the eight per-metric detail reports and return their paths.
pub fn write_detail_reports(
    report: &CoverageReport,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    let mut paths = Vec::with_capacity(MetricKind::ALL.len());
    for kind in MetricKind::ALL {
        let result = report.result(kind);
        let document = DetailDocument {
            documented_and_tested: &result.documented_and_tested_detail,
            documented_and_not_tested: &result.documented_and_not_tested_detail,
            not_documented_and_tested: &result.not_documented_and_tested_detail,
        };
        let path = out_dir.join(format!("{}.json", kind.name()));
        write_atomic(&path, &to_pretty_json(&document)?)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Write all nine report files, creating `out_dir` if needed.
pub fn write_all_reports(
    report: &CoverageReport,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|err| ReportError::Write(format!("{}: {err}", out_dir.display())))?;
    let mut paths = vec![write_stats_report(report, out_dir)?];
    paths.extend(write_detail_reports(report, out_dir)?);
    Ok(paths)
}
