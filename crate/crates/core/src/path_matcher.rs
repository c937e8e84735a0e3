//! Resolution of concrete request paths to specification path templates.
//!
//! Colliding templates (e.g. `/users/auth` vs `/users/{id}`) are resolved
//! deterministically: the candidate whose leftmost differing segment is
//! static wins; remaining ties fall back to lexicographic template order.

use std::collections::BTreeMap;

use percent_encoding::percent_decode_str;

use crate::spec_model::{ApiSpecification, Method, PathTemplate, Segment};

/// Outcome of matching one concrete path against the specification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult<'spec> {
    pub template: &'spec PathTemplate,
    /// Whether the request method is documented on the matched template.
    pub method_supported: bool,
    pub extracted_parameters: BTreeMap<String, String>,
}

/// Remove the longest server prefix that is a segment-aligned prefix of
/// `raw_path`. Paths that carry no known prefix are returned unchanged.
pub fn strip_server_prefix<'a>(raw_path: &'a str, spec: &ApiSpecification) -> &'a str {
    let mut best: Option<&str> = None;
    for prefix in &spec.server_prefixes {
        if raw_path == prefix
            || (raw_path.starts_with(prefix.as_str())
                && raw_path.as_bytes().get(prefix.len()) == Some(&b'/'))
        {
            if best.is_none_or(|b| prefix.len() > b.len()) {
                best = Some(prefix);
            }
        }
    }
    match best {
        Some(prefix) if raw_path.len() > prefix.len() => &raw_path[prefix.len()..],
        Some(_) => "/",
        None => raw_path,
    }
}

fn normalize_trailing_slash(path: &str) -> &str {
    let mut path = path;
    while path.len() > 1 && path.ends_with('/') {
        path = &path[..path.len() - 1];
    }
    path
}

fn concrete_segments(path: &str) -> Vec<&str> {
    let path = normalize_trailing_slash(path);
    if path == "/" {
        return Vec::new();
    }
    path[1..].split('/').collect()
}

fn template_matches(template: &PathTemplate, segments: &[&str]) -> bool {
    template.segments.len() == segments.len()
        && template
            .segments
            .iter()
            .zip(segments)
            .all(|(seg, concrete)| match seg {
                Segment::Static(text) => text == concrete,
                Segment::Parameter(_) => !concrete.is_empty(),
            })
}

/// Left-to-right static-over-parameter preference: returns the more
/// specific of two candidate templates with equal segment counts.
fn more_specific<'a>(a: &'a PathTemplate, b: &'a PathTemplate) -> std::cmp::Ordering {
    for (sa, sb) in a.segments.iter().zip(&b.segments) {
        match (sa, sb) {
            (Segment::Static(_), Segment::Parameter(_)) => return std::cmp::Ordering::Less,
            (Segment::Parameter(_), Segment::Static(_)) => return std::cmp::Ordering::Greater,
            _ => {}
        }
    }
    std::cmp::Ordering::Equal
}

fn extract_parameters(template: &PathTemplate, segments: &[&str]) -> BTreeMap<String, String> {
    template
        .segments
        .iter()
        .zip(segments)
        .filter_map(|(seg, concrete)| match seg {
            Segment::Parameter(name) => Some((
                name.clone(),
                percent_decode_str(concrete).decode_utf8_lossy().into_owned(),
            )),
            Segment::Static(_) => None,
        })
        .collect()
}

/// Match a concrete path (server prefix already stripped) against the
/// specification's templates. Returns `None` when nothing matches.
pub fn match_path<'spec>(path: &str, spec: &'spec ApiSpecification) -> Option<MatchResult<'spec>> {
    let segments = concrete_segments(path);
    let mut candidates: Vec<&PathTemplate> = spec
        .paths
        .iter()
        .filter(|t| template_matches(t, &segments))
        .collect();
    if candidates.is_empty() {
        return None;
    }
    candidates.sort_by(|a, b| {
        more_specific(a, b).then_with(|| a.template.cmp(&b.template))
    });
    if candidates.len() > 1 && more_specific(candidates[0], candidates[1]).is_eq() {
        log::warn!(
            "path {path:?} matches templates {:?} and {:?} with equal specificity; \
             choosing {:?} by template order",
            candidates[0].template,
            candidates[1].template,
            candidates[0].template,
        );
    }
    let winner = candidates[0];
    Some(MatchResult {
        template: winner,
        method_supported: false,
        extracted_parameters: extract_parameters(winner, &segments),
    })
}

/// Strip the server prefix, match the path, and check the method, yielding
/// the `(template, method)` key used by the metrics. A matched template
/// with an undocumented method is reported with `method_supported: false`.
pub fn classify_path<'spec>(
    raw_path: &str,
    method: &str,
    spec: &'spec ApiSpecification,
) -> Option<MatchResult<'spec>> {
    let stripped = strip_server_prefix(raw_path, spec);
    let mut result = match_path(stripped, spec)?;
    result.method_supported = Method::from_lower(&method.to_ascii_lowercase())
        .map(|m| result.template.operation(m).is_some())
        .unwrap_or(false);
    Some(result)
}
