//! OpenAPI document loading: JSON/YAML parsing, local `$ref` resolution,
//! and normalization of v2 and v3 documents into [`ApiSpecification`].

use std::collections::BTreeSet;
use std::path::Path;

use serde_json::Value;

use super::{
    normalize_media_type, parse_template, ApiSpecification, Method, OperationDescriptor,
    ParameterDescriptor, ParameterLocation, PathTemplate, SpecError, StatusCodeDoc, ValueDomain,
};

const MAX_REF_DEPTH: usize = 32;

/// Load an OpenAPI document (JSON or YAML) and normalize it.
///
/// Server prefixes are extracted from `servers`/`basePath`, and parameters
/// declared at path level are merged into every operation of that path.
pub fn load_specification(path: &Path) -> Result<ApiSpecification, SpecError> {
    let bytes = match std::fs::read(path) {
        Ok(bytes) => bytes,
        Err(err) if err.kind() == std::io::ErrorKind::NotFound => {
            return Err(SpecError::FileNotFound(path.to_path_buf()))
        }
        Err(err) => return Err(SpecError::Parse(format!("cannot read {path:?}: {err}"))),
    };
    let doc = parse_document(&bytes)?;
    normalize_document(&doc)
}

fn parse_document(bytes: &[u8]) -> Result<Value, SpecError> {
    match serde_json::from_slice::<Value>(bytes) {
        Ok(value) => Ok(value),
        Err(json_err) => {
            let yaml: serde_yaml::Value = serde_yaml::from_slice(bytes).map_err(|yaml_err| {
                SpecError::Parse(format!(
                    "document is neither valid JSON ({json_err}) nor valid YAML ({yaml_err})"
                ))
            })?;
            yaml_to_json(yaml)
        }
    }
}

fn yaml_to_json(value: serde_yaml::Value) -> Result<Value, SpecError> {
    Ok(match value {
        serde_yaml::Value::Null => Value::Null,
        serde_yaml::Value::Bool(b) => Value::Bool(b),
        serde_yaml::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Value::from(i)
            } else if let Some(u) = n.as_u64() {
                Value::from(u)
            } else {
                Value::from(n.as_f64().unwrap_or(0.0))
            }
        }
        serde_yaml::Value::String(s) => Value::String(s),
        serde_yaml::Value::Sequence(items) => Value::Array(
            items
                .into_iter()
                .map(yaml_to_json)
                .collect::<Result<_, _>>()?,
        ),
        serde_yaml::Value::Mapping(map) => {
            let mut out = serde_json::Map::new();
            for (key, val) in map {
                // OpenAPI YAML commonly uses bare status codes as keys;
                // they arrive here as numbers and must become strings.
                let key = match key {
                    serde_yaml::Value::String(s) => s,
                    serde_yaml::Value::Number(n) => n.to_string(),
                    serde_yaml::Value::Bool(b) => b.to_string(),
                    other => {
                        return Err(SpecError::Parse(format!(
                            "unsupported YAML mapping key: {other:?}"
                        )))
                    }
                };
                out.insert(key, yaml_to_json(val)?);
            }
            Value::Object(out)
        }
        serde_yaml::Value::Tagged(tagged) => yaml_to_json(tagged.value)?,
    })
}

/// Follow `$ref` chains within the document. Only local `#/...` pointers
/// are supported.
fn resolve<'a>(doc: &'a Value, node: &'a Value) -> Result<&'a Value, SpecError> {
    let mut current = node;
    for _ in 0..MAX_REF_DEPTH {
        let Some(reference) = current.get("$ref").and_then(Value::as_str) else {
            return Ok(current);
        };
        let pointer = reference.strip_prefix('#').ok_or_else(|| {
            SpecError::Parse(format!("unsupported non-local $ref: {reference:?}"))
        })?;
        current = doc.pointer(pointer).ok_or_else(|| {
            SpecError::Parse(format!("unresolvable $ref target: {reference:?}"))
        })?;
    }
    Err(SpecError::Parse("$ref chain too deep or cyclic".into()))
}

fn str_list(value: Option<&Value>) -> Vec<String> {
    value
        .and_then(Value::as_array)
        .map(|items| {
            items
                .iter()
                .filter_map(Value::as_str)
                .map(normalize_media_type)
                .collect()
        })
        .unwrap_or_default()
}

fn scalar_to_string(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn normalize_prefix(raw: &str) -> Option<String> {
    let trimmed = raw.trim().trim_end_matches('/');
    if trimmed.is_empty() || trimmed == "/" {
        return None;
    }
    Some(if trimmed.starts_with('/') {
        trimmed.to_string()
    } else {
        format!("/{trimmed}")
    })
}

/// Path prefix of one OA3 `servers[].url` entry, with declared variable
/// defaults substituted.
fn server_url_prefix(server: &Value) -> Option<String> {
    let mut url = server.get("url")?.as_str()?.to_string();
    if let Some(vars) = server.get("variables").and_then(Value::as_object) {
        for (name, decl) in vars {
            if let Some(default) = decl.get("default").map(scalar_to_string) {
                url = url.replace(&format!("{{{name}}}"), &default);
            }
        }
    }
    let path = if url.starts_with('/') {
        url
    } else {
        url::Url::parse(&url).ok()?.path().to_string()
    };
    normalize_prefix(&path)
}

enum SpecVersion {
    V2,
    V3,
}

fn normalize_document(doc: &Value) -> Result<ApiSpecification, SpecError> {
    let root = doc
        .as_object()
        .ok_or_else(|| SpecError::Parse("document root is not an object".into()))?;
    let version = if root.contains_key("swagger") {
        SpecVersion::V2
    } else if root.contains_key("openapi") {
        SpecVersion::V3
    } else {
        return Err(SpecError::Parse(
            "missing OpenAPI version marker (neither \"swagger\" nor \"openapi\" present)".into(),
        ));
    };

    let title = doc
        .pointer("/info/title")
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_string();

    let mut server_prefixes = Vec::new();
    match version {
        SpecVersion::V2 => {
            if let Some(base) = root.get("basePath").and_then(Value::as_str) {
                server_prefixes.extend(normalize_prefix(base));
            }
        }
        SpecVersion::V3 => {
            if let Some(servers) = root.get("servers").and_then(Value::as_array) {
                for server in servers {
                    if let Some(prefix) = server_url_prefix(server) {
                        if !server_prefixes.contains(&prefix) {
                            server_prefixes.push(prefix);
                        }
                    }
                }
            }
        }
    }

    // OpenAPI 2 operation-level consumes/produces default to the globals.
    let global_consumes = str_list(root.get("consumes"));
    let global_produces = str_list(root.get("produces"));

    let mut paths = Vec::new();
    let mut seen_templates = BTreeSet::new();
    if let Some(path_items) = root.get("paths").and_then(Value::as_object) {
        for (raw_template, item) in path_items {
            if raw_template.starts_with("x-") {
                continue;
            }
            let template = normalize_template_text(raw_template);
            if !seen_templates.insert(template.clone()) {
                return Err(SpecError::Semantic(format!(
                    "duplicate path template after normalization: {template:?}"
                )));
            }
            let item = resolve(doc, item)?;
            let segments = parse_template(&template)?;

            let path_level_params = collect_parameters(doc, item.get("parameters"), &version)?;

            let mut operations = Vec::new();
            for method in Method::ALL {
                let Some(op_value) = item.get(method.as_lower()) else {
                    continue;
                };
                let op_value = resolve(doc, op_value)?;
                let mut parameters =
                    collect_parameters(doc, op_value.get("parameters"), &version)?;
                // Path-level parameters apply to every operation unless the
                // operation redeclares the same (name, location).
                for inherited in &path_level_params {
                    if !parameters
                        .iter()
                        .any(|p| p.name == inherited.name && p.location == inherited.location)
                    {
                        parameters.push(inherited.clone());
                    }
                }

                let (request_content_types, response_content_types, documented_status_codes) =
                    match version {
                        SpecVersion::V2 => {
                            let consumes = if op_value.get("consumes").is_some() {
                                str_list(op_value.get("consumes"))
                            } else {
                                global_consumes.clone()
                            };
                            let produces = if op_value.get("produces").is_some() {
                                str_list(op_value.get("produces"))
                            } else {
                                global_produces.clone()
                            };
                            let codes = collect_status_codes(doc, op_value.get("responses"))?;
                            (consumes, produces, codes)
                        }
                        SpecVersion::V3 => {
                            let consumes = request_body_content_types(doc, op_value)?;
                            let (produces, codes) =
                                v3_responses(doc, op_value.get("responses"))?;
                            (consumes, produces, codes)
                        }
                    };

                operations.push(OperationDescriptor {
                    method,
                    parameters,
                    request_content_types: dedup(request_content_types),
                    documented_status_codes,
                    response_content_types: dedup(response_content_types),
                });
            }

            // A path item with no recognized operations documents nothing
            // testable; drop it.
            if operations.is_empty() {
                continue;
            }
            paths.push(PathTemplate {
                template,
                segments,
                operations,
            });
        }
    }

    Ok(ApiSpecification {
        title,
        server_prefixes,
        paths,
    })
}

fn normalize_template_text(raw: &str) -> String {
    let mut template = raw.trim().to_string();
    while template.len() > 1 && template.ends_with('/') {
        template.pop();
    }
    template
}

fn dedup(list: Vec<String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    list.into_iter().filter(|ct| seen.insert(ct.clone())).collect()
}

fn collect_parameters(
    doc: &Value,
    params: Option<&Value>,
    version: &SpecVersion,
) -> Result<Vec<ParameterDescriptor>, SpecError> {
    let mut out = Vec::new();
    let Some(items) = params.and_then(Value::as_array) else {
        return Ok(out);
    };
    for item in items {
        let param = resolve(doc, item)?;
        let Some(name) = param.get("name").and_then(Value::as_str) else {
            continue;
        };
        let Some(location) = param.get("in").and_then(Value::as_str) else {
            continue;
        };
        let location = match location {
            "path" => ParameterLocation::Path,
            "query" => ParameterLocation::Query,
            "header" => ParameterLocation::Header,
            "cookie" => ParameterLocation::Cookie,
            // `body` and `formData` parameters belong to body-properties
            // coverage, which is out of scope here.
            _ => continue,
        };
        let (type_name, enum_values) = match version {
            SpecVersion::V2 => (
                param.get("type").and_then(Value::as_str),
                param.get("enum").and_then(Value::as_array),
            ),
            SpecVersion::V3 => {
                let schema = match param.get("schema") {
                    Some(schema) => Some(resolve(doc, schema)?),
                    None => None,
                };
                (
                    schema.and_then(|s| s.get("type")).and_then(Value::as_str),
                    schema.and_then(|s| s.get("enum")).and_then(Value::as_array),
                )
            }
        };
        let value_domain = if let Some(values) = enum_values {
            let values: Vec<String> = values.iter().map(scalar_to_string).collect();
            if values.is_empty() {
                ValueDomain::Unbounded
            } else {
                ValueDomain::Finite(values)
            }
        } else if type_name == Some("boolean") {
            ValueDomain::Finite(vec!["true".into(), "false".into()])
        } else {
            ValueDomain::Unbounded
        };
        out.push(ParameterDescriptor {
            name: name.to_string(),
            location,
            value_domain,
            required: param
                .get("required")
                .and_then(Value::as_bool)
                .unwrap_or(location == ParameterLocation::Path),
        });
    }
    Ok(out)
}

fn collect_status_codes(
    doc: &Value,
    responses: Option<&Value>,
) -> Result<Vec<StatusCodeDoc>, SpecError> {
    let mut out = Vec::new();
    let Some(map) = responses.and_then(Value::as_object) else {
        return Ok(out);
    };
    for (key, response) in map {
        resolve(doc, response)?;
        if let Some(code) = parse_status_key(key) {
            out.push(code);
        }
    }
    Ok(out)
}

/// `default` and range keys such as `2XX` match any code in their class and
/// would make the status-code denominator ill-defined; both are excluded.
fn parse_status_key(key: &str) -> Option<StatusCodeDoc> {
    if key == "default" {
        return Some(StatusCodeDoc::Default);
    }
    let code: u16 = key.parse().ok()?;
    (100..=599).contains(&code).then_some(StatusCodeDoc::Code(code))
}

fn request_body_content_types(doc: &Value, op_value: &Value) -> Result<Vec<String>, SpecError> {
    let Some(body) = op_value.get("requestBody") else {
        return Ok(Vec::new());
    };
    let body = resolve(doc, body)?;
    Ok(content_map_types(body.get("content")))
}

fn v3_responses(
    doc: &Value,
    responses: Option<&Value>,
) -> Result<(Vec<String>, Vec<StatusCodeDoc>), SpecError> {
    let mut produces = Vec::new();
    let mut codes = Vec::new();
    let Some(map) = responses.and_then(Value::as_object) else {
        return Ok((produces, codes));
    };
    for (key, response) in map {
        let response = resolve(doc, response)?;
        if let Some(code) = parse_status_key(key) {
            codes.push(code);
        }
        produces.extend(content_map_types(response.get("content")));
    }
    Ok((produces, codes))
}

fn content_map_types(content: Option<&Value>) -> Vec<String> {
    content
        .and_then(Value::as_object)
        .map(|map| map.keys().map(|k| normalize_media_type(k)).collect())
        .unwrap_or_default()
}
