//! Normalized model of an OpenAPI specification and the inventory of
//! testable elements derived from it.
//!
//! Both OpenAPI 2 (`basePath`, `consumes`/`produces`) and OpenAPI 3
//! (`servers`, per-media-type request/response bodies) documents are
//! normalized into the same [`ApiSpecification`].

mod load;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub use load::load_specification;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("specification file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("failed to parse specification: {0}")]
    Parse(String),
    #[error("invalid specification: {0}")]
    Semantic(String),
}

/// The HTTP methods an operation can be documented under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Get,
    Post,
    Put,
    Delete,
    Patch,
    Head,
    Options,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Get,
        Method::Post,
        Method::Put,
        Method::Delete,
        Method::Patch,
        Method::Head,
        Method::Options,
    ];

    pub fn from_lower(s: &str) -> Option<Method> {
        match s {
            "get" => Some(Method::Get),
            "post" => Some(Method::Post),
            "put" => Some(Method::Put),
            "delete" => Some(Method::Delete),
            "patch" => Some(Method::Patch),
            "head" => Some(Method::Head),
            "options" => Some(Method::Options),
            _ => None,
        }
    }

    pub fn as_lower(&self) -> &'static str {
        match self {
            Method::Get => "get",
            Method::Post => "post",
            Method::Put => "put",
            Method::Delete => "delete",
            Method::Patch => "patch",
            Method::Head => "head",
            Method::Options => "options",
        }
    }

    pub fn as_upper(&self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
            Method::Put => "PUT",
            Method::Delete => "DELETE",
            Method::Patch => "PATCH",
            Method::Head => "HEAD",
            Method::Options => "OPTIONS",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_lower())
    }
}

/// One slash-separated piece of a path template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Static(String),
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParameterLocation {
    Path,
    Query,
    Header,
    Cookie,
}

/// Admissible values for a parameter: finite for boolean/enum-typed
/// parameters, unbounded otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueDomain {
    Finite(Vec<String>),
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterDescriptor {
    pub name: String,
    pub location: ParameterLocation,
    pub value_domain: ValueDomain,
    pub required: bool,
}

/// A documented response status: a concrete code or the catch-all `default`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatusCodeDoc {
    Code(u16),
    Default,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationDescriptor {
    pub method: Method,
    pub parameters: Vec<ParameterDescriptor>,
    /// Media types the operation consumes; may contain wildcards such as
    /// `application/*`. Normalized to lowercase with parameters stripped.
    pub request_content_types: Vec<String>,
    pub documented_status_codes: Vec<StatusCodeDoc>,
    /// Media types the operation produces, normalized like the consume list.
    pub response_content_types: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathTemplate {
    /// Template text, e.g. `/pet/{petId}`. Starts with `/`, no trailing
    /// slash except for the root itself.
    pub template: String,
    pub segments: Vec<Segment>,
    pub operations: Vec<OperationDescriptor>,
}

impl PathTemplate {
    pub fn operation(&self, method: Method) -> Option<&OperationDescriptor> {
        self.operations.iter().find(|op| op.method == method)
    }

    pub fn parameter_names(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Parameter(name) => Some(name.as_str()),
            Segment::Static(_) => None,
        })
    }
}

/// Normalized view of an OpenAPI document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiSpecification {
    pub title: String,
    /// URL path prefixes derived from server/base-path declarations,
    /// e.g. `/v2`. Never contains the bare root.
    pub server_prefixes: Vec<String>,
    pub paths: Vec<PathTemplate>,
}

impl ApiSpecification {
    pub fn template(&self, template: &str) -> Option<&PathTemplate> {
        self.paths.iter().find(|p| p.template == template)
    }

    pub fn operation_count(&self) -> usize {
        self.paths.iter().map(|p| p.operations.len()).sum()
    }
}

/// The two response classes tracked by status-code-class coverage:
/// 2XX is `correct`, 4XX/5XX is `erroneous`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StatusClass {
    Correct,
    Erroneous,
}

impl StatusClass {
    pub fn of_code(code: u16) -> Option<StatusClass> {
        match code {
            200..=299 => Some(StatusClass::Correct),
            400..=599 => Some(StatusClass::Erroneous),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            StatusClass::Correct => "correct",
            StatusClass::Erroneous => "erroneous",
        }
    }
}

impl fmt::Display for StatusClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every element documented by the specification, grouped per metric.
/// These sets are the denominators of the coverage metrics.
///
/// Key shapes: `(template, method)` pairs use the lowercase method name so
/// they compare directly against observed traffic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TestableElementInventory {
    pub paths: BTreeSet<String>,
    pub operations: BTreeSet<(String, String)>,
    pub parameters: BTreeSet<(String, String, String)>,
    pub parameter_values: BTreeSet<(String, String, String, String)>,
    pub request_content_types: BTreeSet<(String, String, String)>,
    pub status_codes: BTreeSet<(String, String, u16)>,
    pub status_code_classes: BTreeSet<(String, String, StatusClass)>,
    pub response_content_types: BTreeSet<(String, String, String)>,
    /// Operations whose consume list contains a wildcard; they accept an
    /// unbounded set of media types and stay out of the request
    /// content-type metric entirely.
    pub wildcard_request_operations: BTreeSet<(String, String)>,
    /// Same exclusion for produce lists and the response content-type
    /// metric.
    pub wildcard_response_operations: BTreeSet<(String, String)>,
}

impl TestableElementInventory {
    /// Values documented for a finite-domain parameter, empty for
    /// unbounded ones.
    pub fn domain_of(&self, template: &str, method: &str, name: &str) -> Vec<&str> {
        self.parameter_values
            .iter()
            .filter(|(t, m, n, _)| t == template && m == method && n == name)
            .map(|(_, _, _, v)| v.as_str())
            .collect()
    }
}

fn has_wildcard(content_types: &[String]) -> bool {
    content_types.iter().any(|ct| ct.contains('*'))
}

/// Derive the inventory of all testable elements from a specification.
///
/// Operations whose consume or produce list contains a wildcard contribute
/// nothing to the corresponding content-type set, and `default` response
/// entries are excluded from the status-code set.
pub fn build_inventory(spec: &ApiSpecification) -> TestableElementInventory {
    let mut inv = TestableElementInventory::default();
    for path in &spec.paths {
        inv.paths.insert(path.template.clone());
        for op in &path.operations {
            let key = (path.template.clone(), op.method.as_lower().to_string());
            inv.operations.insert(key.clone());

            for param in &op.parameters {
                inv.parameters
                    .insert((key.0.clone(), key.1.clone(), param.name.clone()));
                if let ValueDomain::Finite(values) = &param.value_domain {
                    for value in values {
                        inv.parameter_values.insert((
                            key.0.clone(),
                            key.1.clone(),
                            param.name.clone(),
                            value.clone(),
                        ));
                    }
                }
            }

            if has_wildcard(&op.request_content_types) {
                inv.wildcard_request_operations.insert(key.clone());
            } else {
                for ct in &op.request_content_types {
                    inv.request_content_types
                        .insert((key.0.clone(), key.1.clone(), ct.clone()));
                }
            }
            if has_wildcard(&op.response_content_types) {
                inv.wildcard_response_operations.insert(key.clone());
            } else {
                for ct in &op.response_content_types {
                    inv.response_content_types
                        .insert((key.0.clone(), key.1.clone(), ct.clone()));
                }
            }

            for code in &op.documented_status_codes {
                if let StatusCodeDoc::Code(c) = code {
                    inv.status_codes.insert((key.0.clone(), key.1.clone(), *c));
                }
            }

            inv.status_code_classes
                .insert((key.0.clone(), key.1.clone(), StatusClass::Correct));
            inv.status_code_classes
                .insert((key.0.clone(), key.1.clone(), StatusClass::Erroneous));
        }
    }
    inv
}

/// Parse a template string into segments, checking the template invariants.
pub fn parse_template(template: &str) -> Result<Vec<Segment>, SpecError> {
    if !template.starts_with('/') {
        return Err(SpecError::Semantic(format!(
            "path template must begin with '/': {template:?}"
        )));
    }
    let mut segments = Vec::new();
    let mut seen_params = BTreeSet::new();
    if template == "/" {
        return Ok(segments);
    }
    for raw in template[1..].split('/') {
        if let Some(name) = raw.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            if !seen_params.insert(name.to_string()) {
                return Err(SpecError::Semantic(format!(
                    "duplicate path parameter {name:?} in template {template:?}"
                )));
            }
            segments.push(Segment::Parameter(name.to_string()));
        } else {
            segments.push(Segment::Static(raw.to_string()));
        }
    }
    Ok(segments)
}

/// Lowercase a media type and drop any `;`-separated parameters such as
/// `charset`.
pub fn normalize_media_type(raw: &str) -> String {
    let base = raw.split(';').next().unwrap_or("");
    base.trim().to_ascii_lowercase()
}
