//! Shared test support: fixture paths, order-normalized JSON comparison,
//! a deterministic generator for small specifications and interaction
//! sets, and an independent brute-force enumeration oracle for all eight
//! metrics.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde_json::Value;

use apicov::dump_ingest::{
    HttpInteraction, HttpRequestRecord, HttpResponseRecord, OperationMatch,
};
use apicov::metrics_engine::DetailSet;
use apicov::path_matcher;
use apicov::spec_model::{
    parse_template, ApiSpecification, Method, OperationDescriptor, ParameterDescriptor,
    ParameterLocation, PathTemplate, StatusClass, StatusCodeDoc, TestableElementInventory,
    ValueDomain,
};

pub fn fixture_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/petstore")
}

/// Order-normalize a JSON value: arrays of scalars are sorted so that
/// list-order differences do not affect comparison.
pub fn normalized(value: &Value) -> Value {
    match value {
        Value::Array(items) => {
            let mut items: Vec<Value> = items.iter().map(normalized).collect();
            items.sort_by_key(|v| v.to_string());
            Value::Array(items)
        }
        Value::Object(map) => Value::Object(
            map.iter()
                .map(|(k, v)| (k.clone(), normalized(v)))
                .collect(),
        ),
        other => other.clone(),
    }
}

pub fn read_json(path: &std::path::Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap_or_else(|err| {
        panic!("cannot read {path:?}: {err}");
    }))
    .unwrap_or_else(|err| panic!("cannot parse {path:?}: {err}"))
}

/// SplitMix64: a tiny deterministic generator so every proptest case is
/// reproducible from its seed alone.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed)
    }

    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        (self.next() % n as u64) as usize
    }

    pub fn chance(&mut self, percent: u64) -> bool {
        self.next() % 100 < percent
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }

    pub fn shuffled<T: Clone>(&mut self, items: &[T]) -> Vec<T> {
        let mut out: Vec<T> = items.to_vec();
        for i in (1..out.len()).rev() {
            out.swap(i, self.below(i + 1));
        }
        out
    }
}

const TEMPLATE_CATALOG: [&str; 12] = [
    "/users",
    "/users/auth",
    "/users/{id}",
    "/users/{id}/posts",
    "/pets",
    "/pets/findByStatus",
    "/pets/{petId}",
    "/orders",
    "/orders/{orderId}/items",
    "/items/{itemId}",
    "/auth/token",
    "/{root}",
];

const METHOD_POOL: [Method; 5] = [
    Method::Get,
    Method::Post,
    Method::Put,
    Method::Delete,
    Method::Patch,
];

const MEDIA_POOL: [&str; 3] = ["application/json", "application/xml", "text/plain"];
const CODE_POOL: [u16; 5] = [200, 201, 400, 404, 500];

/// A random small specification: up to 5 paths, up to 3 operations per
/// path, up to 3 parameters per operation.
pub fn random_spec(rng: &mut Rng) -> ApiSpecification {
    let path_count = 1 + rng.below(5);
    let templates = rng.shuffled(&TEMPLATE_CATALOG);

    let mut paths = Vec::new();
    for template in templates.into_iter().take(path_count) {
        let segments = parse_template(template).expect("catalog templates are valid");
        let template_params: Vec<String> = segments
            .iter()
            .filter_map(|s| match s {
                apicov::spec_model::Segment::Parameter(name) => Some(name.clone()),
                _ => None,
            })
            .collect();

        let method_count = 1 + rng.below(3);
        let methods = rng.shuffled(&METHOD_POOL);
        let mut operations = Vec::new();
        for method in methods.into_iter().take(method_count) {
            let mut parameters = Vec::new();
            for name in &template_params {
                if rng.chance(60) {
                    parameters.push(ParameterDescriptor {
                        name: name.clone(),
                        location: ParameterLocation::Path,
                        value_domain: ValueDomain::Unbounded,
                        required: true,
                    });
                }
            }
            if parameters.len() < 3 && rng.chance(40) {
                parameters.push(ParameterDescriptor {
                    name: "status".into(),
                    location: ParameterLocation::Query,
                    value_domain: ValueDomain::Finite(vec![
                        "available".into(),
                        "pending".into(),
                        "sold".into(),
                    ]),
                    required: false,
                });
            }
            if parameters.len() < 3 && rng.chance(35) {
                parameters.push(ParameterDescriptor {
                    name: "verbose".into(),
                    location: ParameterLocation::Query,
                    value_domain: ValueDomain::Finite(vec!["true".into(), "false".into()]),
                    required: false,
                });
            }
            if parameters.len() < 3 && rng.chance(30) {
                parameters.push(ParameterDescriptor {
                    name: "tag".into(),
                    location: ParameterLocation::Query,
                    value_domain: ValueDomain::Unbounded,
                    required: false,
                });
            }
            if parameters.len() < 3 && rng.chance(15) {
                parameters.push(ParameterDescriptor {
                    name: "X-Api-Version".into(),
                    location: ParameterLocation::Header,
                    value_domain: ValueDomain::Finite(vec!["1".into(), "2".into()]),
                    required: false,
                });
            }

            let mut pick_media = |rng: &mut Rng| -> Vec<String> {
                let mut list = Vec::new();
                if rng.chance(60) {
                    let shuffled = rng.shuffled(&MEDIA_POOL);
                    for media in shuffled.into_iter().take(1 + rng.below(2)) {
                        list.push(media.to_string());
                    }
                    if rng.chance(10) {
                        list.push("application/*".into());
                    }
                }
                list
            };
            let request_content_types = pick_media(rng);
            let response_content_types = pick_media(rng);

            let mut documented_status_codes = Vec::new();
            let codes = rng.shuffled(&CODE_POOL);
            for code in codes.into_iter().take(1 + rng.below(3)) {
                documented_status_codes.push(StatusCodeDoc::Code(code));
            }
            if rng.chance(15) {
                documented_status_codes.push(StatusCodeDoc::Default);
            }

            operations.push(OperationDescriptor {
                method,
                parameters,
                request_content_types,
                documented_status_codes,
                response_content_types,
            });
        }
        paths.push(PathTemplate {
            template: template.to_string(),
            segments,
            operations,
        });
    }

    ApiSpecification {
        title: "generated".into(),
        server_prefixes: if rng.chance(50) { vec!["/v1".into()] } else { Vec::new() },
        paths,
    }
}

const PATH_VALUE_POOL: [&str; 5] = ["1", "42", "abc", "sold", "x-y"];
const QUERY_NAME_POOL: [&str; 4] = ["status", "verbose", "tag", "extra"];
const QUERY_VALUE_POOL: [&str; 7] = ["sold", "available", "unknown", "true", "TRUE", "false", "7"];
const UNDOCUMENTED_PATHS: [&str; 3] = ["/nope", "/users/auth/extra", "/definitely/not/here"];

/// Instantiate a template with concrete parameter values.
pub fn instantiate(template: &PathTemplate, rng: &mut Rng) -> String {
    if template.segments.is_empty() {
        return "/".into();
    }
    let mut path = String::new();
    for segment in &template.segments {
        path.push('/');
        match segment {
            apicov::spec_model::Segment::Static(text) => path.push_str(text),
            apicov::spec_model::Segment::Parameter(_) => {
                path.push_str(rng.pick(&PATH_VALUE_POOL))
            }
        }
    }
    path
}

/// A random interaction set against the given specification, matched
/// through the real classifier exactly as ingestion would do.
pub fn random_interactions(
    spec: &ApiSpecification,
    count: usize,
    rng: &mut Rng,
) -> Vec<HttpInteraction> {
    let mut out = Vec::new();
    for sequence in 0..count {
        let (raw_path, method) = if !spec.paths.is_empty() && rng.chance(80) {
            let template = rng.pick(&spec.paths);
            let mut path = instantiate(template, rng);
            if !spec.server_prefixes.is_empty() && rng.chance(50) {
                path = format!("{}{}", spec.server_prefixes[0], path);
            }
            (path, *rng.pick(&METHOD_POOL))
        } else {
            (rng.pick(&UNDOCUMENTED_PATHS).to_string(), *rng.pick(&METHOD_POOL))
        };

        let mut query_parameters: std::collections::BTreeMap<String, Vec<String>> =
            Default::default();
        for name in QUERY_NAME_POOL {
            if rng.chance(25) {
                let values: Vec<String> = (0..1 + rng.below(2))
                    .map(|_| rng.pick(&QUERY_VALUE_POOL).to_string())
                    .collect();
                query_parameters.insert(name.to_string(), values);
            }
        }

        let mut headers = vec![("Host".to_string(), "api.test".to_string())];
        let body = if rng.chance(30) { b"{}".to_vec() } else { Vec::new() };
        if rng.chance(45) {
            let media = rng.pick(&[
                "application/json",
                "application/json; charset=utf-8",
                "application/xml",
                "text/plain",
            ]);
            headers.push(("Content-Type".to_string(), media.to_string()));
        }
        if rng.chance(15) {
            headers.push(("X-Api-Version".to_string(), rng.pick(&["1", "3"]).to_string()));
        }
        if rng.chance(10) {
            headers.push(("Cookie".to_string(), "session=s1".to_string()));
        }

        let request = HttpRequestRecord {
            method: method.as_upper().to_string(),
            raw_path,
            query_parameters,
            headers,
            body,
            structured_body: None,
        };

        let response = if rng.chance(70) {
            let status = *rng.pick(&[200u16, 201, 204, 101, 301, 400, 404, 500]);
            let mut headers = Vec::new();
            if rng.chance(60) {
                headers.push((
                    "Content-Type".to_string(),
                    rng.pick(&MEDIA_POOL).to_string(),
                ));
            }
            Some(HttpResponseRecord {
                status_code: status,
                headers,
                body: Vec::new(),
                structured_body: None,
            })
        } else {
            None
        };

        let classified = path_matcher::classify_path(&request.raw_path, &request.method, spec);
        let (operation_match, extracted) = match classified {
            Some(result) => (
                Some(OperationMatch {
                    template: result.template.template.clone(),
                    method: request.method.to_ascii_lowercase(),
                    method_supported: result.method_supported,
                }),
                result.extracted_parameters,
            ),
            None => (None, Default::default()),
        };

        out.push(HttpInteraction {
            sequence_id: sequence as u64,
            request,
            response,
            operation_match,
            extracted_path_parameters: extracted,
        });
    }
    out
}

/// Raw counts of one metric as the oracle computes them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub documented: usize,
    pub documented_and_tested: usize,
    pub total_tested: usize,
}

/// Independent brute-force enumeration of the eight metrics: for every
/// inventory element, scan the interactions for a witness; then scan the
/// interactions for exercised elements outside the inventory.
pub mod oracle {
    use super::*;

    fn key_of(interaction: &HttpInteraction) -> Option<(&str, &str)> {
        interaction
            .operation_match
            .as_ref()
            .map(|m| (m.template.as_str(), m.method.as_str()))
    }

    fn supplies(interaction: &HttpInteraction, name: &str) -> bool {
        if interaction.extracted_path_parameters.contains_key(name)
            || interaction.request.query_parameters.contains_key(name)
        {
            return true;
        }
        if interaction
            .request
            .headers
            .iter()
            .any(|(n, _)| n.eq_ignore_ascii_case(name))
        {
            return true;
        }
        cookie_pairs(interaction).iter().any(|(n, _)| n == name)
    }

    fn cookie_pairs(interaction: &HttpInteraction) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (header, value) in &interaction.request.headers {
            if !header.eq_ignore_ascii_case("cookie") {
                continue;
            }
            for pair in value.split(';') {
                if let Some((n, v)) = pair.split_once('=') {
                    out.push((n.trim().to_string(), v.trim().to_string()));
                }
            }
        }
        out
    }

    fn values_supplied(interaction: &HttpInteraction, name: &str) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(v) = interaction.extracted_path_parameters.get(name) {
            out.push(v.clone());
        }
        if let Some(vs) = interaction.request.query_parameters.get(name) {
            out.extend(vs.iter().cloned());
        }
        for (n, v) in &interaction.request.headers {
            if n.eq_ignore_ascii_case(name) {
                out.push(v.clone());
            }
        }
        for (n, v) in cookie_pairs(interaction) {
            if n == name {
                out.push(v);
            }
        }
        out
    }

    fn request_content_type(interaction: &HttpInteraction) -> Option<String> {
        interaction
            .request
            .headers
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case("content-type"))
            .map(|(_, v)| v.split(';').next().unwrap_or("").trim().to_ascii_lowercase())
    }

    fn response_content_type(interaction: &HttpInteraction) -> Option<String> {
        interaction.response.as_ref().and_then(|r| {
            r.headers
                .iter()
                .find(|(n, _)| n.eq_ignore_ascii_case("content-type"))
                .map(|(_, v)| v.split(';').next().unwrap_or("").trim().to_ascii_lowercase())
        })
    }

    pub fn path_coverage(inv: &TestableElementInventory, ints: &[HttpInteraction]) -> Counts {
        let tested = inv
            .paths
            .iter()
            .filter(|p| ints.iter().any(|i| key_of(i).is_some_and(|(t, _)| t == p.as_str())))
            .count();
        let matched: BTreeSet<&str> = ints.iter().filter_map(|i| key_of(i).map(|(t, _)| t)).collect();
        let unmatched: BTreeSet<&str> = ints
            .iter()
            .filter(|i| key_of(i).is_none())
            .map(|i| i.request.raw_path.as_str())
            .collect();
        Counts {
            documented: inv.paths.len(),
            documented_and_tested: tested,
            total_tested: matched.len() + unmatched.len(),
        }
    }

    pub fn operation_coverage(inv: &TestableElementInventory, ints: &[HttpInteraction]) -> Counts {
        let tested = inv
            .operations
            .iter()
            .filter(|(t, m)| {
                ints.iter()
                    .any(|i| key_of(i) == Some((t.as_str(), m.as_str())))
            })
            .count();
        let observed: BTreeSet<(&str, &str)> = ints.iter().filter_map(key_of).collect();
        Counts {
            documented: inv.operations.len(),
            documented_and_tested: tested,
            total_tested: observed.len(),
        }
    }

    pub fn parameter_coverage(inv: &TestableElementInventory, ints: &[HttpInteraction]) -> Counts {
        let tested = inv
            .parameters
            .iter()
            .filter(|(t, m, name)| {
                ints.iter()
                    .any(|i| key_of(i) == Some((t.as_str(), m.as_str())) && supplies(i, name))
            })
            .count();
        let mut undocumented: BTreeSet<(String, String, String)> = BTreeSet::new();
        for interaction in ints {
            let Some((t, m)) = key_of(interaction) else { continue };
            let names = interaction
                .request
                .query_parameters
                .keys()
                .chain(interaction.extracted_path_parameters.keys());
            for name in names {
                let element = (t.to_string(), m.to_string(), name.clone());
                if !inv.parameters.contains(&element) {
                    undocumented.insert(element);
                }
            }
        }
        Counts {
            documented: inv.parameters.len(),
            documented_and_tested: tested,
            total_tested: tested + undocumented.len(),
        }
    }

    pub fn parameter_value_coverage(
        inv: &TestableElementInventory,
        ints: &[HttpInteraction],
    ) -> Counts {
        let bool_domain = |t: &str, m: &str, n: &str| {
            let domain: BTreeSet<&str> = inv
                .parameter_values
                .iter()
                .filter(|(et, em, en, _)| et == t && em == m && en == n)
                .map(|(_, _, _, v)| v.as_str())
                .collect();
            domain.len() == 2 && domain.contains("true") && domain.contains("false")
        };
        let canon = |t: &str, m: &str, n: &str, supplied: &str| {
            if bool_domain(t, m, n) {
                supplied.to_ascii_lowercase()
            } else {
                supplied.to_string()
            }
        };

        let tested = inv
            .parameter_values
            .iter()
            .filter(|(t, m, n, v)| {
                ints.iter().any(|i| {
                    key_of(i) == Some((t.as_str(), m.as_str()))
                        && values_supplied(i, n).iter().any(|s| canon(t, m, n, s) == *v)
                })
            })
            .count();

        let mut undocumented: BTreeSet<(String, String, String, String)> = BTreeSet::new();
        let finite_params: BTreeSet<(String, String, String)> = inv
            .parameter_values
            .iter()
            .map(|(t, m, n, _)| (t.clone(), m.clone(), n.clone()))
            .collect();
        for interaction in ints {
            let Some((t, m)) = key_of(interaction) else { continue };
            for (pt, pm, pn) in &finite_params {
                if pt != t || pm != m {
                    continue;
                }
                for supplied in values_supplied(interaction, pn) {
                    let canonical = canon(t, m, pn, &supplied);
                    let documented_element =
                        (pt.clone(), pm.clone(), pn.clone(), canonical.clone());
                    if !inv.parameter_values.contains(&documented_element) {
                        undocumented.insert((pt.clone(), pm.clone(), pn.clone(), supplied));
                    }
                }
            }
        }
        Counts {
            documented: inv.parameter_values.len(),
            documented_and_tested: tested,
            total_tested: tested + undocumented.len(),
        }
    }

    fn content_types(
        documented: &BTreeSet<(String, String, String)>,
        wildcard: &BTreeSet<(String, String)>,
        observed: &[((String, String), String)],
    ) -> Counts {
        let tested = documented
            .iter()
            .filter(|(t, m, ct)| {
                observed
                    .iter()
                    .any(|((ot, om), oct)| ot == t && om == m && oct == ct)
            })
            .count();
        let mut undocumented: BTreeSet<(String, String, String)> = BTreeSet::new();
        for ((t, m), ct) in observed {
            if wildcard.contains(&(t.clone(), m.clone())) {
                continue;
            }
            let element = (t.clone(), m.clone(), ct.clone());
            if !documented.contains(&element) {
                undocumented.insert(element);
            }
        }
        Counts {
            documented: documented.len(),
            documented_and_tested: tested,
            total_tested: tested + undocumented.len(),
        }
    }

    pub fn request_content_type_coverage(
        inv: &TestableElementInventory,
        ints: &[HttpInteraction],
    ) -> Counts {
        let observed: Vec<((String, String), String)> = ints
            .iter()
            .filter_map(|i| {
                let (t, m) = key_of(i)?;
                Some(((t.to_string(), m.to_string()), request_content_type(i)?))
            })
            .collect();
        content_types(
            &inv.request_content_types,
            &inv.wildcard_request_operations,
            &observed,
        )
    }

    pub fn response_content_type_coverage(
        inv: &TestableElementInventory,
        ints: &[HttpInteraction],
    ) -> Counts {
        let observed: Vec<((String, String), String)> = ints
            .iter()
            .filter_map(|i| {
                let (t, m) = key_of(i)?;
                Some(((t.to_string(), m.to_string()), response_content_type(i)?))
            })
            .collect();
        content_types(
            &inv.response_content_types,
            &inv.wildcard_response_operations,
            &observed,
        )
    }

    pub fn status_code_class_coverage(
        inv: &TestableElementInventory,
        ints: &[HttpInteraction],
    ) -> Counts {
        let class_of = |code: u16| match code {
            200..=299 => Some(StatusClass::Correct),
            400..=599 => Some(StatusClass::Erroneous),
            _ => None,
        };
        let observed: Vec<((String, String), StatusClass)> = ints
            .iter()
            .filter_map(|i| {
                let (t, m) = key_of(i)?;
                let class = class_of(i.response.as_ref()?.status_code)?;
                Some(((t.to_string(), m.to_string()), class))
            })
            .collect();
        let tested = inv
            .status_code_classes
            .iter()
            .filter(|(t, m, class)| {
                observed
                    .iter()
                    .any(|((ot, om), oc)| ot == t && om == m && oc == class)
            })
            .count();
        let mut undocumented: BTreeSet<(String, String, StatusClass)> = BTreeSet::new();
        for ((t, m), class) in &observed {
            let element = (t.clone(), m.clone(), *class);
            if !inv.status_code_classes.contains(&element) {
                undocumented.insert(element);
            }
        }
        Counts {
            documented: inv.status_code_classes.len(),
            documented_and_tested: tested,
            total_tested: tested + undocumented.len(),
        }
    }

    pub fn status_code_coverage(
        inv: &TestableElementInventory,
        ints: &[HttpInteraction],
    ) -> Counts {
        let observed: Vec<((String, String), u16)> = ints
            .iter()
            .filter_map(|i| {
                let (t, m) = key_of(i)?;
                Some(((t.to_string(), m.to_string()), i.response.as_ref()?.status_code))
            })
            .collect();
        let tested = inv
            .status_codes
            .iter()
            .filter(|(t, m, code)| {
                observed
                    .iter()
                    .any(|((ot, om), oc)| ot == t && om == m && oc == code)
            })
            .count();
        let mut undocumented: BTreeSet<(String, String, u16)> = BTreeSet::new();
        for ((t, m), code) in &observed {
            let element = (t.clone(), m.clone(), *code);
            if !inv.status_codes.contains(&element) {
                undocumented.insert(element);
            }
        }
        Counts {
            documented: inv.status_codes.len(),
            documented_and_tested: tested,
            total_tested: tested + undocumented.len(),
        }
    }
}

/// Flatten a path -> [method] detail set to element pairs.
pub fn flatten_methods(detail: &DetailSet) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    if let Value::Object(map) = detail.to_json() {
        for (path, methods) in map {
            for method in methods.as_array().expect("method list") {
                out.insert((path.clone(), method.as_str().expect("method").to_string()));
            }
        }
    }
    out
}

/// Flatten a path -> method -> [name] detail set to element triples.
pub fn flatten_names(detail: &DetailSet) -> BTreeSet<(String, String, String)> {
    let mut out = BTreeSet::new();
    if let Value::Object(map) = detail.to_json() {
        for (path, by_method) in map {
            for (method, names) in by_method.as_object().expect("method map") {
                for name in names.as_array().expect("name list") {
                    out.insert((
                        path.clone(),
                        method.clone(),
                        name.as_str().expect("name").to_string(),
                    ));
                }
            }
        }
    }
    out
}

/// Flatten a path -> method -> [code] detail set.
pub fn flatten_codes(detail: &DetailSet) -> BTreeSet<(String, String, u16)> {
    let mut out = BTreeSet::new();
    if let Value::Object(map) = detail.to_json() {
        for (path, by_method) in map {
            for (method, codes) in by_method.as_object().expect("method map") {
                for code in codes.as_array().expect("code list") {
                    out.insert((path.clone(), method.clone(), code.as_u64().expect("code") as u16));
                }
            }
        }
    }
    out
}

/// Flatten a path -> method -> name -> [value] detail set.
pub fn flatten_values(detail: &DetailSet) -> BTreeSet<(String, String, String, String)> {
    let mut out = BTreeSet::new();
    if let Value::Object(map) = detail.to_json() {
        for (path, by_method) in map {
            for (method, by_name) in by_method.as_object().expect("method map") {
                for (name, values) in by_name.as_object().expect("name map") {
                    for value in values.as_array().expect("value list") {
                        out.insert((
                            path.clone(),
                            method.clone(),
                            name.clone(),
                            value.as_str().expect("value").to_string(),
                        ));
                    }
                }
            }
        }
    }
    out
}

/// Keys (paths) of a path -> [method] detail set.
pub fn detail_paths(detail: &DetailSet) -> BTreeSet<String> {
    match detail.to_json() {
        Value::Object(map) => map.keys().cloned().collect(),
        _ => BTreeSet::new(),
    }
}
