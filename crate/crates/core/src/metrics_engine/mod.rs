//! The eight coverage metrics and the Test Coverage Level.
//!
//! Every metric is a ratio of documented-and-tested elements to documented
//! elements. "Tested" always means exercised by at least one interaction;
//! the five input metrics (path, operation, parameter, parameter value,
//! request content type) use every interaction including orphans, while
//! the three output metrics (status code class, status code, response
//! content type) use only interactions that carry a response. Elements
//! exercised but absent from the specification count toward `totalTested`
//! and are reported separately.

mod details;

use std::collections::{BTreeMap, BTreeSet};

use crate::dump_ingest::HttpInteraction;
use crate::spec_model::{StatusClass, TestableElementInventory};

pub use details::{DetailSet, MethodKey};

/// The eight metrics, in their fixed reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MetricKind {
    PathCoverage,
    OperationCoverage,
    ParameterCoverage,
    ParameterValueCoverage,
    RequestContentTypeCoverage,
    StatusCodeClassCoverage,
    StatusCodeCoverage,
    ResponseContentTypeCoverage,
}

impl MetricKind {
    pub const ALL: [MetricKind; 8] = [
        MetricKind::PathCoverage,
        MetricKind::OperationCoverage,
        MetricKind::ParameterCoverage,
        MetricKind::ParameterValueCoverage,
        MetricKind::RequestContentTypeCoverage,
        MetricKind::StatusCodeClassCoverage,
        MetricKind::StatusCodeCoverage,
        MetricKind::ResponseContentTypeCoverage,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::PathCoverage => "pathCoverage",
            MetricKind::OperationCoverage => "operationCoverage",
            MetricKind::ParameterCoverage => "parameterCoverage",
            MetricKind::ParameterValueCoverage => "parameterValueCoverage",
            MetricKind::RequestContentTypeCoverage => "requestContentTypeCoverage",
            MetricKind::StatusCodeClassCoverage => "statusCodeClassCoverage",
            MetricKind::StatusCodeCoverage => "statusCodeCoverage",
            MetricKind::ResponseContentTypeCoverage => "responseContentTypeCoverage",
        }
    }
}

/// One metric's counts and per-element detail sets.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricResult {
    pub metric: MetricKind,
    pub documented: usize,
    pub documented_and_tested: usize,
    pub total_tested: usize,
    pub documented_and_tested_detail: DetailSet,
    pub documented_and_not_tested_detail: DetailSet,
    pub not_documented_and_tested_detail: DetailSet,
}

impl MetricResult {
    /// Coverage rate in [0, 1]. An empty denominator counts as vacuously
    /// covered so that an API without, say, enum parameters can still
    /// reach the higher coverage levels.
    pub fn rate(&self) -> f64 {
        if self.documented == 0 {
            1.0
        } else {
            self.documented_and_tested as f64 / self.documented as f64
        }
    }
}

/// All eight metric results plus the Test Coverage Level.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub results: Vec<MetricResult>,
    pub tcl: u8,
    pub tcl_capped: bool,
}

impl CoverageReport {
    pub fn result(&self, kind: MetricKind) -> &MetricResult {
        self.results
            .iter()
            .find(|r| r.metric == kind)
            .expect("all eight metrics are always computed")
    }
}

/// Compute all eight metrics and the TCL.
pub fn compute_coverage_report(
    inventory: &TestableElementInventory,
    interactions: &[HttpInteraction],
) -> CoverageReport {
    let results = vec![
        path_coverage(inventory, interactions),
        operation_coverage(inventory, interactions),
        parameter_coverage(inventory, interactions),
        parameter_value_coverage(inventory, interactions),
        request_content_type_coverage(inventory, interactions),
        status_code_class_coverage(inventory, interactions),
        status_code_coverage(inventory, interactions),
        response_content_type_coverage(inventory, interactions),
    ];
    let (tcl, tcl_capped) = compute_tcl(&results);
    CoverageReport {
        results,
        tcl,
        tcl_capped,
    }
}

/// Highest level of the incremental coverage ladder whose cumulative
/// requirements hold. Levels 6 and 7 depend on body-properties and
/// operation-flow coverage, which are not computed here, so the result is
/// capped at 5; the returned flag marks when that cap was hit.
pub fn compute_tcl(results: &[MetricResult]) -> (u8, bool) {
    let full = |kind: MetricKind| {
        results
            .iter()
            .find(|r| r.metric == kind)
            .map(|r| r.rate() >= 1.0)
            .unwrap_or(false)
    };

    let ladder = [
        full(MetricKind::PathCoverage),
        full(MetricKind::OperationCoverage),
        full(MetricKind::RequestContentTypeCoverage)
            && full(MetricKind::ResponseContentTypeCoverage),
        full(MetricKind::ParameterCoverage) && full(MetricKind::StatusCodeClassCoverage),
        full(MetricKind::StatusCodeCoverage),
    ];
    let mut tcl = 0u8;
    for level_ok in ladder {
        if !level_ok {
            break;
        }
        tcl += 1;
    }
    (tcl, tcl == 5)
}

fn lower(method: &str) -> String {
    method.to_ascii_lowercase()
}

/// Path coverage: a documented path template is tested when at least one
/// interaction matched it, with any method and regardless of the response.
/// Unmatched raw paths are reported as tested-but-undocumented,
/// deduplicated by their path text.
pub fn path_coverage(
    inventory: &TestableElementInventory,
    interactions: &[HttpInteraction],
) -> MetricResult {
    let mut observed: BTreeMap<String, BTreeSet<MethodKey>> = BTreeMap::new();
    let mut unmatched: BTreeMap<String, BTreeSet<MethodKey>> = BTreeMap::new();
    for interaction in interactions {
        let method = MethodKey::new(lower(&interaction.request.method));
        match interaction.operation_key() {
            Some((template, _)) => {
                observed.entry(template.to_string()).or_default().insert(method);
            }
            None => {
                unmatched
                    .entry(interaction.request.raw_path.clone())
                    .or_default()
                    .insert(method);
            }
        }
    }

    let tested: BTreeSet<&String> = observed.keys().collect();
    let documented_and_tested = inventory.paths.iter().filter(|p| tested.contains(p)).count();
    let total_tested = observed.len() + unmatched.len();

    // Untested paths are annotated with their documented methods, tested
    // ones with the methods actually observed.
    let mut not_tested: BTreeMap<String, BTreeSet<MethodKey>> = BTreeMap::new();
    for path in &inventory.paths {
        if !observed.contains_key(path) {
            let methods = inventory
                .operations
                .iter()
                .filter(|(t, _)| t == path)
                .map(|(_, m)| MethodKey::new(m.clone()))
                .collect();
            not_tested.insert(path.clone(), methods);
        }
    }

    MetricResult {
        metric: MetricKind::PathCoverage,
        documented: inventory.paths.len(),
        documented_and_tested,
        total_tested,
        documented_and_tested_detail: DetailSet::Methods(observed),
        documented_and_not_tested_detail: DetailSet::Methods(not_tested),
        not_documented_and_tested_detail: DetailSet::Methods(unmatched),
    }
}

/// Operation coverage over `(template, method)` pairs. Interactions whose
/// method is not documented on the matched template count toward
/// `totalTested` only.
pub fn operation_coverage(
    inventory: &TestableElementInventory,
    interactions: &[HttpInteraction],
) -> MetricResult {
    let mut tested: BTreeSet<(String, String)> = BTreeSet::new();
    let mut undocumented: BTreeSet<(String, String)> = BTreeSet::new();
    for interaction in interactions {
        if let Some((template, method)) = interaction.operation_key() {
            let key = (template.to_string(), method.to_string());
            if inventory.operations.contains(&key) {
                tested.insert(key);
            } else {
                undocumented.insert(key);
            }
        }
    }

    let not_tested: BTreeSet<(String, String)> =
        inventory.operations.difference(&tested).cloned().collect();

    MetricResult {
        metric: MetricKind::OperationCoverage,
        documented: inventory.operations.len(),
        documented_and_tested: tested.len(),
        total_tested: tested.len() + undocumented.len(),
        documented_and_tested_detail: details::methods_of(&tested),
        documented_and_not_tested_detail: details::methods_of(&not_tested),
        not_documented_and_tested_detail: details::methods_of(&undocumented),
    }
}

/// Does this interaction supply a value for the named parameter through
/// any channel: template extraction, query string, headers, or cookies?
fn supplies_parameter(interaction: &HttpInteraction, name: &str) -> bool {
    interaction.extracted_path_parameters.contains_key(name)
        || interaction.request.query_parameters.contains_key(name)
        || interaction.request.header_values(name).next().is_some()
        || interaction.request.cookies().contains_key(name)
}

fn supplied_values(interaction: &HttpInteraction, name: &str) -> Vec<String> {
    let mut values = Vec::new();
    if let Some(value) = interaction.extracted_path_parameters.get(name) {
        values.push(value.clone());
    }
    if let Some(query_values) = interaction.request.query_parameters.get(name) {
        values.extend(query_values.iter().cloned());
    }
    values.extend(interaction.request.header_values(name).map(str::to_string));
    if let Some(value) = interaction.request.cookies().get(name) {
        values.push(value.clone());
    }
    values
}

fn by_operation(interactions: &[HttpInteraction]) -> BTreeMap<(String, String), Vec<&HttpInteraction>> {
    let mut map: BTreeMap<(String, String), Vec<&HttpInteraction>> = BTreeMap::new();
    for interaction in interactions {
        if let Some((template, method)) = interaction.operation_key() {
            map.entry((template.to_string(), method.to_string()))
                .or_default()
                .push(interaction);
        }
    }
    map
}

/// Parameter coverage over `(template, method, name)` elements. A
/// documented parameter is tested when a matched interaction supplies a
/// value for it; supplied query and path parameters absent from the spec
/// count as tested-but-undocumented. Headers and cookies are only
/// consulted for documented names — every HTTP request carries standard
/// headers that are not test inputs.
pub fn parameter_coverage(
    inventory: &TestableElementInventory,
    interactions: &[HttpInteraction],
) -> MetricResult {
    let grouped = by_operation(interactions);

    let mut tested: BTreeSet<(String, String, String)> = BTreeSet::new();
    for element in &inventory.parameters {
        let (template, method, name) = element;
        if let Some(group) = grouped.get(&(template.clone(), method.clone())) {
            if group.iter().any(|i| supplies_parameter(i, name)) {
                tested.insert(element.clone());
            }
        }
    }

    let mut undocumented: BTreeSet<(String, String, String)> = BTreeSet::new();
    for ((template, method), group) in &grouped {
        for interaction in group {
            let supplied = interaction
                .request
                .query_parameters
                .keys()
                .chain(interaction.extracted_path_parameters.keys());
            for name in supplied {
                let element = (template.clone(), method.clone(), name.clone());
                if !inventory.parameters.contains(&element) {
                    undocumented.insert(element);
                }
            }
        }
    }

    let not_tested: BTreeSet<_> = inventory.parameters.difference(&tested).cloned().collect();

    MetricResult {
        metric: MetricKind::ParameterCoverage,
        documented: inventory.parameters.len(),
        documented_and_tested: tested.len(),
        total_tested: tested.len() + undocumented.len(),
        documented_and_tested_detail: details::names_of(&tested),
        documented_and_not_tested_detail: details::names_of(&not_tested),
        not_documented_and_tested_detail: details::names_of(&undocumented),
    }
}

/// Parameter value coverage, over the admissible values of boolean and
/// enum typed parameters. Boolean literals compare case-insensitively;
/// supplied values outside the documented domain count toward
/// `totalTested` only.
pub fn parameter_value_coverage(
    inventory: &TestableElementInventory,
    interactions: &[HttpInteraction],
) -> MetricResult {
    let grouped = by_operation(interactions);

    // Finite domains, keyed by parameter.
    let mut domains: BTreeMap<(String, String, String), BTreeSet<&String>> = BTreeMap::new();
    for (template, method, name, value) in &inventory.parameter_values {
        domains
            .entry((template.clone(), method.clone(), name.clone()))
            .or_default()
            .insert(value);
    }
    let is_boolean = |domain: &BTreeSet<&String>| {
        domain.len() == 2 && domain.iter().all(|v| *v == "true" || *v == "false")
    };

    let mut tested: BTreeSet<(String, String, String, String)> = BTreeSet::new();
    let mut undocumented: BTreeSet<(String, String, String, String)> = BTreeSet::new();
    for (param_key, domain) in &domains {
        let (template, method, name) = param_key;
        let Some(group) = grouped.get(&(template.clone(), method.clone())) else {
            continue;
        };
        let boolean = is_boolean(domain);
        for interaction in group {
            for supplied in supplied_values(interaction, name) {
                let canonical = if boolean {
                    supplied.to_ascii_lowercase()
                } else {
                    supplied.clone()
                };
                if domain.contains(&canonical) {
                    tested.insert((
                        template.clone(),
                        method.clone(),
                        name.clone(),
                        canonical,
                    ));
                } else {
                    undocumented.insert((
                        template.clone(),
                        method.clone(),
                        name.clone(),
                        supplied,
                    ));
                }
            }
        }
    }

    let not_tested: BTreeSet<_> = inventory
        .parameter_values
        .difference(&tested)
        .cloned()
        .collect();

    MetricResult {
        metric: MetricKind::ParameterValueCoverage,
        documented: inventory.parameter_values.len(),
        documented_and_tested: tested.len(),
        total_tested: tested.len() + undocumented.len(),
        documented_and_tested_detail: details::values_of(&tested),
        documented_and_not_tested_detail: details::values_of(&not_tested),
        not_documented_and_tested_detail: details::values_of(&undocumented),
    }
}

fn content_type_coverage(
    kind: MetricKind,
    documented: &BTreeSet<(String, String, String)>,
    wildcard_operations: &BTreeSet<(String, String)>,
    observed: impl Iterator<Item = ((String, String), String)>,
) -> MetricResult {
    let mut tested: BTreeSet<(String, String, String)> = BTreeSet::new();
    let mut undocumented: BTreeSet<(String, String, String)> = BTreeSet::new();
    for ((template, method), content_type) in observed {
        // Operations with wildcard content types accept anything; they
        // contribute to neither side of this metric.
        if wildcard_operations.contains(&(template.clone(), method.clone())) {
            continue;
        }
        let element = (template, method, content_type);
        if documented.contains(&element) {
            tested.insert(element);
        } else {
            undocumented.insert(element);
        }
    }

    let not_tested: BTreeSet<_> = documented.difference(&tested).cloned().collect();

    MetricResult {
        metric: kind,
        documented: documented.len(),
        documented_and_tested: tested.len(),
        total_tested: tested.len() + undocumented.len(),
        documented_and_tested_detail: details::names_of(&tested),
        documented_and_not_tested_detail: details::names_of(&not_tested),
        not_documented_and_tested_detail: details::names_of(&undocumented),
    }
}

/// Request content-type coverage: a documented `(operation, media type)`
/// element is tested when a matched interaction sent exactly that type
/// (parameters such as charset stripped).
pub fn request_content_type_coverage(
    inventory: &TestableElementInventory,
    interactions: &[HttpInteraction],
) -> MetricResult {
    let observed = interactions.iter().filter_map(|interaction| {
        let (template, method) = interaction.operation_key()?;
        let content_type = interaction.request.content_type()?;
        Some(((template.to_string(), method.to_string()), content_type))
    });
    content_type_coverage(
        MetricKind::RequestContentTypeCoverage,
        &inventory.request_content_types,
        &inventory.wildcard_request_operations,
        observed,
    )
}

/// Response content-type coverage, symmetric to the request side over the
/// Content-Type of observed responses.
pub fn response_content_type_coverage(
    inventory: &TestableElementInventory,
    interactions: &[HttpInteraction],
) -> MetricResult {
    let observed = interactions.iter().filter_map(|interaction| {
        let (template, method) = interaction.operation_key()?;
        let content_type = interaction.response.as_ref()?.content_type()?;
        Some(((template.to_string(), method.to_string()), content_type))
    });
    content_type_coverage(
        MetricKind::ResponseContentTypeCoverage,
        &inventory.response_content_types,
        &inventory.wildcard_response_operations,
        observed,
    )
}

/// Status-code-class coverage: each documented operation owns two
/// elements, `correct` (2XX) and `erroneous` (4XX/5XX). Responses in
/// 1XX/3XX belong to neither class.
pub fn status_code_class_coverage(
    inventory: &TestableElementInventory,
    interactions: &[HttpInteraction],
) -> MetricResult {
    let mut tested: BTreeSet<(String, String, StatusClass)> = BTreeSet::new();
    let mut undocumented: BTreeSet<(String, String, StatusClass)> = BTreeSet::new();
    for interaction in interactions {
        let Some((template, method)) = interaction.operation_key() else {
            continue;
        };
        let Some(response) = &interaction.response else { continue };
        let Some(class) = StatusClass::of_code(response.status_code) else {
            continue;
        };
        let element = (template.to_string(), method.to_string(), class);
        if inventory.status_code_classes.contains(&element) {
            tested.insert(element);
        } else {
            undocumented.insert(element);
        }
    }

    let not_tested: BTreeSet<_> = inventory
        .status_code_classes
        .difference(&tested)
        .cloned()
        .collect();

    MetricResult {
        metric: MetricKind::StatusCodeClassCoverage,
        documented: inventory.status_code_classes.len(),
        documented_and_tested: tested.len(),
        total_tested: tested.len() + undocumented.len(),
        documented_and_tested_detail: details::classes_of(&tested),
        documented_and_not_tested_detail: details::classes_of(&not_tested),
        not_documented_and_tested_detail: details::classes_of(&undocumented),
    }
}

/// Status-code coverage over the concrete codes documented per operation.
/// Obtained codes that are not documented (including every code obtained
/// through an undocumented method) count toward `totalTested` only.
pub fn status_code_coverage(
    inventory: &TestableElementInventory,
    interactions: &[HttpInteraction],
) -> MetricResult {
    let mut tested: BTreeSet<(String, String, u16)> = BTreeSet::new();
    let mut undocumented: BTreeSet<(String, String, u16)> = BTreeSet::new();
    for interaction in interactions {
        let Some((template, method)) = interaction.operation_key() else {
            continue;
        };
        let Some(response) = &interaction.response else { continue };
        let element = (template.to_string(), method.to_string(), response.status_code);
        if inventory.status_codes.contains(&element) {
            tested.insert(element);
        } else {
            undocumented.insert(element);
        }
    }

    let not_tested: BTreeSet<_> = inventory.status_codes.difference(&tested).cloned().collect();

    MetricResult {
        metric: MetricKind::StatusCodeCoverage,
        documented: inventory.status_codes.len(),
        documented_and_tested: tested.len(),
        total_tested: tested.len() + undocumented.len(),
        documented_and_tested_detail: details::codes_of(&tested),
        documented_and_not_tested_detail: details::codes_of(&not_tested),
        not_documented_and_tested_detail: details::codes_of(&undocumented),
    }
}
