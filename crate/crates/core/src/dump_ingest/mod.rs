//! Ingestion of plain-text HTTP dumps: directory scanning, defensive
//! message parsing, spec matching, and the durable interaction store.
//!
//! Dump files follow the `<n>-request.txt` / `<n>-response.txt` naming
//! convention. Parse failures never abort a run; they are tallied and the
//! affected interaction is skipped (or kept as an orphan when only the
//! response side is unusable).

mod message;
mod store;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::path_matcher;
use crate::spec_model::ApiSpecification;

pub use message::{parse_body, parse_request, parse_response};
pub use store::{
    load_interactions, load_store, persist_interactions, InteractionStore, StoreError,
    STORE_FORMAT_VERSION,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("dump directory not found: {0}")]
    DirectoryNotFound(PathBuf),
    #[error("duplicate sequence id {0} for {1} files")]
    DuplicateSequenceId(u64, &'static str),
    #[error("malformed HTTP request: {0}")]
    MalformedRequest(String),
    #[error("malformed HTTP response: {0}")]
    MalformedResponse(String),
    #[error("dump directory io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One parsed HTTP request from a dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HttpRequestRecord {
    /// Upper-cased method text, e.g. `GET`.
    pub method: String,
    /// URL path as sent, without scheme/host and with the query removed.
    pub raw_path: String,
    /// Decoded query parameters; names compare case-sensitively.
    pub query_parameters: BTreeMap<String, Vec<String>>,
    /// Header (name, value) pairs in message order; lookups are
    /// case-insensitive on the name.
    pub headers: Vec<(String, String)>,
    #[serde(with = "base64_bytes")]
    pub body: Vec<u8>,
    /// Parsed payload tree when the declared content type is JSON.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structured_body: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HttpResponseRecord {
    pub status_code: u16,
    pub headers: Vec<(String, String)>,
    #[serde(with = "base64_bytes")]
    pub body: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structured_body: Option<serde_json::Value>,
}

/// The `(template, method)` key an interaction resolved to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OperationMatch {
    pub template: String,
    /// Lowercase method name as used by the metrics.
    pub method: String,
    /// False when the template matched but the spec does not document the
    /// request method on it.
    pub method_supported: bool,
}

/// One request with its optional paired response, matched to a spec
/// operation when possible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HttpInteraction {
    pub sequence_id: u64,
    pub request: HttpRequestRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<HttpResponseRecord>,
    #[serde(rename = "match", default, skip_serializing_if = "Option::is_none")]
    pub operation_match: Option<OperationMatch>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extracted_path_parameters: BTreeMap<String, String>,
}

fn header_matches(name: &str, wanted: &str) -> bool {
    name.eq_ignore_ascii_case(wanted)
}

fn header_values<'a>(
    headers: &'a [(String, String)],
    name: &'a str,
) -> impl Iterator<Item = &'a str> {
    headers
        .iter()
        .filter(move |(n, _)| header_matches(n, name))
        .map(|(_, v)| v.as_str())
}

impl HttpRequestRecord {
    pub fn header_values<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> {
        header_values(&self.headers, name)
    }

    pub fn first_header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(n, _)| header_matches(n, name))
            .map(|(_, v)| v.as_str())
    }

    /// Normalized request content type (lowercase, parameters stripped).
    pub fn content_type(&self) -> Option<String> {
        self.first_header("content-type")
            .map(crate::spec_model::normalize_media_type)
    }

    /// Cookie pairs from all `Cookie` headers.
    pub fn cookies(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for value in self.header_values("cookie") {
            for pair in value.split(';') {
                if let Some((name, val)) = pair.split_once('=') {
                    out.insert(name.trim().to_string(), val.trim().to_string());
                }
            }
        }
        out
    }
}

impl HttpResponseRecord {
    pub fn header_values<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> {
        header_values(&self.headers, name)
    }

    pub fn first_header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(n, _)| header_matches(n, name))
            .map(|(_, v)| v.as_str())
    }

    pub fn content_type(&self) -> Option<String> {
        self.first_header("content-type")
            .map(crate::spec_model::normalize_media_type)
    }
}

impl HttpInteraction {
    pub fn operation_key(&self) -> Option<(&str, &str)> {
        self.operation_match
            .as_ref()
            .map(|m| (m.template.as_str(), m.method.as_str()))
    }
}

/// One scanned dump entry: raw request text plus the paired response text
/// when the companion file exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpEntry {
    pub sequence_id: u64,
    pub request_text: Vec<u8>,
    pub response_text: Option<Vec<u8>>,
}

fn parse_dump_name(name: &str) -> Option<(u64, bool)> {
    let rest = name.strip_suffix(".txt")?;
    let (digits, role) = rest
        .strip_suffix("-request")
        .map(|d| (d, true))
        .or_else(|| rest.strip_suffix("-response").map(|d| (d, false)))?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().map(|n| (n, role))
}

/// Scan a dump directory and pair request and response files by sequence
/// number. Entries come back ordered by ascending sequence id; response
/// files with no matching request are reported as a warning and skipped.
pub fn scan_dump_directory(dir: &Path) -> Result<Vec<DumpEntry>, IngestError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|_| IngestError::DirectoryNotFound(dir.to_path_buf()))?;

    let mut requests: BTreeMap<u64, PathBuf> = BTreeMap::new();
    let mut responses: BTreeMap<u64, PathBuf> = BTreeMap::new();
    for entry in entries {
        let entry = entry?;
        let file_name = entry.file_name();
        let Some(name) = file_name.to_str() else { continue };
        let Some((sequence, is_request)) = parse_dump_name(name) else {
            continue;
        };
        let map = if is_request { &mut requests } else { &mut responses };
        if map.insert(sequence, entry.path()).is_some() {
            return Err(IngestError::DuplicateSequenceId(
                sequence,
                if is_request { "request" } else { "response" },
            ));
        }
    }

    for (sequence, path) in &responses {
        if !requests.contains_key(sequence) {
            log::warn!("response file {path:?} has no matching request file; skipped");
        }
    }

    let mut out = Vec::with_capacity(requests.len());
    for (sequence, path) in requests {
        let request_text = std::fs::read(&path)?;
        let response_text = match responses.get(&sequence) {
            Some(path) => Some(std::fs::read(path)?),
            None => None,
        };
        out.push(DumpEntry {
            sequence_id: sequence,
            request_text,
            response_text,
        });
    }
    Ok(out)
}

/// Hash of the dump directory contents (convention-named files only), used
/// to tie a store back to its source dumps.
pub fn dump_directory_fingerprint(dir: &Path) -> Result<String, IngestError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|_| IngestError::DirectoryNotFound(dir.to_path_buf()))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|name| parse_dump_name(name).is_some())
        .collect();
    names.sort();

    let mut hasher = Sha256::new();
    for name in names {
        hasher.update(name.as_bytes());
        hasher.update([0]);
        hasher.update(std::fs::read(dir.join(&name))?);
        hasher.update([0]);
    }
    let digest = hasher.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok(format!("sha256:{hex}"))
}

/// Per-stage tallies from one ingestion run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub request_files: usize,
    pub parsed: usize,
    pub request_parse_failures: usize,
    pub response_parse_failures: usize,
    pub body_parse_failures: usize,
    pub orphan_requests: usize,
}

#[derive(Debug)]
pub struct IngestOutcome {
    pub interactions: Vec<HttpInteraction>,
    pub stats: IngestStats,
    pub fingerprint: String,
}

/// Full ingestion pipeline: scan, parse, and match a dump directory
/// against the specification.
pub fn ingest_directory(
    dir: &Path,
    spec: &ApiSpecification,
) -> Result<IngestOutcome, IngestError> {
    let entries = scan_dump_directory(dir)?;
    let fingerprint = dump_directory_fingerprint(dir)?;
    let mut stats = IngestStats {
        request_files: entries.len(),
        ..IngestStats::default()
    };

    let mut interactions = Vec::new();
    for entry in entries {
        let mut request = match parse_request(&entry.request_text) {
            Ok(request) => request,
            Err(err) => {
                log::warn!("dump {}: {err}; interaction skipped", entry.sequence_id);
                stats.request_parse_failures += 1;
                continue;
            }
        };
        if request.structured_body.is_none()
            && wants_structured_body(request.content_type().as_deref())
            && !request.body.is_empty()
        {
            stats.body_parse_failures += 1;
        }

        let response = match entry.response_text {
            Some(text) => match parse_response(&text) {
                Ok(response) => {
                    if response.structured_body.is_none()
                        && wants_structured_body(response.content_type().as_deref())
                        && !response.body.is_empty()
                    {
                        stats.body_parse_failures += 1;
                    }
                    Some(response)
                }
                Err(err) => {
                    log::warn!(
                        "dump {}: {err}; request kept as orphan",
                        entry.sequence_id
                    );
                    stats.response_parse_failures += 1;
                    None
                }
            },
            None => None,
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
            None => (None, BTreeMap::new()),
        };

        // Requests are large enough to keep only once: the structured body
        // tree was already attached during parsing.
        if response.is_none() {
            stats.orphan_requests += 1;
        }
        stats.parsed += 1;
        request.method = request.method.to_ascii_uppercase();
        interactions.push(HttpInteraction {
            sequence_id: entry.sequence_id,
            request,
            response,
            operation_match,
            extracted_path_parameters: extracted,
        });
    }
    Ok(IngestOutcome {
        interactions,
        stats,
        fingerprint,
    })
}

fn wants_structured_body(content_type: Option<&str>) -> bool {
    content_type.is_some_and(message::is_json_media_type)
}

mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(deserializer)?;
        STANDARD
            .decode(text.as_bytes())
            .map_err(serde::de::Error::custom)
    }
}
