//! Black-box test coverage for REST APIs.
//!
//! Given an OpenAPI specification and a directory of plain-text HTTP
//! request/response dumps, this crate computes eight coverage metrics and a
//! Test Coverage Level, and writes machine-readable JSON reports that list
//! tested, untested, and undocumented API elements.

pub mod capture_proxy;
pub mod cli;
pub mod dump_ingest;
pub mod metrics_engine;
pub mod path_matcher;
pub mod report_writer;
pub mod spec_model;

pub use cli::{load_config, run, ToolConfig};
pub use dump_ingest::{HttpInteraction, HttpRequestRecord, HttpResponseRecord};
pub use metrics_engine::{compute_coverage_report, CoverageReport, MetricResult};
pub use spec_model::{build_inventory, load_specification, ApiSpecification};
