//! Tool configuration and pipeline orchestration.
//!
//! The JSON configuration file selects the stages to run (`modules`) and
//! names the specification, the dump directory, the report directory, and
//! the interaction store. Relative paths are resolved against the config
//! file's directory; absolute paths should be preferred.

use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

use crate::capture_proxy::ProxyError;
use crate::dump_ingest::{self, IngestError, IngestStats, StoreError};
use crate::metrics_engine::{compute_coverage_report, CoverageReport};
use crate::report_writer::{self, ReportError};
use crate::spec_model::{build_inventory, load_specification, SpecError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("configuration file not found: {0}")]
    NotFound(PathBuf),
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration key \"{key}\": {message}")]
    Validation { key: String, message: String },
}

/// Which pipeline stages a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunModules {
    All,
    DataCollection,
    Statistics,
}

impl fmt::Display for RunModules {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunModules::All => "all",
            RunModules::DataCollection => "dataCollection",
            RunModules::Statistics => "statistics",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ToolConfig {
    pub modules: RunModules,
    pub specification: PathBuf,
    pub dumps_dir: Option<PathBuf>,
    pub reports_dir: Option<PathBuf>,
    pub db_path: PathBuf,
}

fn validation(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

fn path_key(
    object: &serde_json::Map<String, Value>,
    key: &str,
    base: &Path,
    required: bool,
) -> Result<Option<PathBuf>, ConfigError> {
    match object.get(key) {
        Some(Value::String(text)) => {
            let path = PathBuf::from(text);
            if path.is_absolute() {
                Ok(Some(path))
            } else {
                log::warn!(
                    "configuration key \"{key}\" uses a relative path {text:?}; \
                     resolving against the config directory (absolute paths should be preferred)"
                );
                Ok(Some(base.join(path)))
            }
        }
        Some(_) => Err(validation(key, "expected a string path")),
        None if required => Err(validation(key, "missing required key")),
        None => Ok(None),
    }
}

/// Load and validate the tool configuration. Keys not needed by the
/// selected stage may be omitted (e.g. `statistics` does not require
/// `dumpsDir`).
pub fn load_config(path: &Path) -> Result<ToolConfig, ConfigError> {
    let bytes = match std::fs::read(path) {
        Ok(bytes) => bytes,
        Err(err) if err.kind() == std::io::ErrorKind::NotFound => {
            return Err(ConfigError::NotFound(path.to_path_buf()))
        }
        Err(err) => return Err(ConfigError::Parse(format!("{}: {err}", path.display()))),
    };
    let value: Value = serde_json::from_slice(&bytes)
        .map_err(|err| ConfigError::Parse(format!("{}: {err}", path.display())))?;
    let object = value
        .as_object()
        .ok_or_else(|| ConfigError::Parse("configuration root must be a JSON object".into()))?;

    let modules = match object.get("modules") {
        Some(Value::String(text)) => match text.as_str() {
            "all" => RunModules::All,
            "dataCollection" => RunModules::DataCollection,
            "statistics" => RunModules::Statistics,
            other => {
                return Err(validation(
                    "modules",
                    format!("unknown value {other:?} (expected \"all\", \"dataCollection\" or \"statistics\")"),
                ))
            }
        },
        Some(_) => return Err(validation("modules", "expected a string")),
        None => return Err(validation("modules", "missing required key")),
    };

    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let needs_dumps = matches!(modules, RunModules::All | RunModules::DataCollection);
    let needs_reports = matches!(modules, RunModules::All | RunModules::Statistics);

    let specification = path_key(object, "specification", &base, true)?.expect("required");
    let db_path = path_key(object, "dbPath", &base, true)?.expect("required");
    let dumps_dir = path_key(object, "dumpsDir", &base, needs_dumps)?;
    let reports_dir = path_key(object, "reportsDir", &base, needs_reports)?;

    Ok(ToolConfig {
        modules,
        specification,
        dumps_dir,
        reports_dir,
        db_path,
    })
}

/// Any failure the pipeline can surface, mapped to a distinct exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Proxy(#[from] ProxyError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Spec(_) => 2,
            RunError::Ingest(_) => 3,
            RunError::Store(_) => 4,
            RunError::Report(_) => 5,
            RunError::Proxy(_) => 3,
        }
    }
}

/// What a successful run produced, for the caller's summary.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub title: String,
    pub ingest: Option<IngestStats>,
    pub report: Option<CoverageReport>,
    pub report_paths: Vec<PathBuf>,
}

/// Execute the configured stages: `dataCollection` ingests dumps and
/// persists the store, `statistics` computes metrics from the store and
/// writes the reports, `all` chains both through the store file.
pub fn run(config: &ToolConfig) -> Result<RunSummary, RunError> {
    let spec = load_specification(&config.specification)?;
    let mut summary = RunSummary {
        title: spec.title.clone(),
        ..RunSummary::default()
    };

    if matches!(config.modules, RunModules::All | RunModules::DataCollection) {
        let dumps_dir = config.dumps_dir.as_ref().expect("validated by load_config");
        let outcome = dump_ingest::ingest_directory(dumps_dir, &spec)?;
        dump_ingest::persist_interactions(
            &config.db_path,
            &outcome.interactions,
            Some(&outcome.fingerprint),
        )?;
        summary.ingest = Some(outcome.stats);
    }

    if matches!(config.modules, RunModules::All | RunModules::Statistics) {
        let reports_dir = config.reports_dir.as_ref().expect("validated by load_config");
        let interactions = dump_ingest::load_interactions(&config.db_path)?;
        let inventory = build_inventory(&spec);
        let report = compute_coverage_report(&inventory, &interactions);
        summary.report_paths = report_writer::write_all_reports(&report, reports_dir)?;
        summary.report = Some(report);
    }

    print_summary(&summary);
    Ok(summary)
}

fn print_summary(summary: &RunSummary) {
    if let Some(stats) = &summary.ingest {
        println!(
            "Ingested {} request file(s): {} interaction(s), {} orphan(s)",
            stats.request_files, stats.parsed, stats.orphan_requests
        );
        println!(
            "Parse failures: {} request(s), {} response(s), {} body payload(s)",
            stats.request_parse_failures,
            stats.response_parse_failures,
            stats.body_parse_failures
        );
    }
    if let Some(report) = &summary.report {
        println!("Coverage for \"{}\":", summary.title);
        println!(
            "  {:<30} {:>7} {:>11} {:>20} {:>12}",
            "metric", "rate", "documented", "documentedAndTested", "totalTested"
        );
        for result in &report.results {
            println!(
                "  {:<30} {:>6.1}% {:>11} {:>20} {:>12}",
                result.metric.name(),
                result.rate() * 100.0,
                result.documented,
                result.documented_and_tested,
                result.total_tested
            );
        }
        let cap_note = if report.tcl_capped {
            " (levels 6-7 require metrics this tool does not compute)"
        } else {
            ""
        };
        println!("  TCL: {}{}", report.tcl, cap_note);
    }
}
