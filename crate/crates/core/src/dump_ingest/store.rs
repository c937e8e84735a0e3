//! Durable single-file store of parsed interactions.
//!
//! The store is a versioned JSON document; the round-trip invariant
//! (persist then load yields equal interactions, ordered by sequence id)
//! is the contract, the encoding is not.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::HttpInteraction;

pub const STORE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot write interaction store: {0}")]
    Write(String),
    #[error("cannot read interaction store: {0}")]
    Read(String),
    #[error("interaction store format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("duplicate sequence id {0} in interaction list")]
    DuplicateSequenceId(u64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct StoreDocument {
    format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dump_fingerprint: Option<String>,
    interactions: Vec<HttpInteraction>,
}

/// Handle to a persisted store file.
#[derive(Debug, Clone)]
pub struct InteractionStore {
    pub path: PathBuf,
    pub dump_fingerprint: Option<String>,
    pub interactions: Vec<HttpInteraction>,
}

/// Persist interactions to a single store file, rejecting duplicate
/// sequence ids before anything is written. The file is replaced
/// atomically (write-then-rename).
pub fn persist_interactions(
    store_path: &Path,
    interactions: &[HttpInteraction],
    dump_fingerprint: Option<&str>,
) -> Result<InteractionStore, StoreError> {
    let mut seen = BTreeSet::new();
    for interaction in interactions {
        if !seen.insert(interaction.sequence_id) {
            return Err(StoreError::DuplicateSequenceId(interaction.sequence_id));
        }
    }
    let mut ordered: Vec<HttpInteraction> = interactions.to_vec();
    ordered.sort_by_key(|i| i.sequence_id);

    let document = StoreDocument {
        format_version: STORE_FORMAT_VERSION,
        dump_fingerprint: dump_fingerprint.map(str::to_string),
        interactions: ordered,
    };
    let encoded = serde_json::to_vec(&document)
        .map_err(|err| StoreError::Write(err.to_string()))?;

    let tmp_path = store_path.with_extension("tmp");
    std::fs::write(&tmp_path, &encoded)
        .map_err(|err| StoreError::Write(format!("{}: {err}", tmp_path.display())))?;
    std::fs::rename(&tmp_path, store_path)
        .map_err(|err| StoreError::Write(format!("{}: {err}", store_path.display())))?;

    Ok(InteractionStore {
        path: store_path.to_path_buf(),
        dump_fingerprint: document.dump_fingerprint,
        interactions: document.interactions,
    })
}

/// Load a store file with its metadata.
pub fn load_store(store_path: &Path) -> Result<InteractionStore, StoreError> {
    let bytes = std::fs::read(store_path)
        .map_err(|err| StoreError::Read(format!("{}: {err}", store_path.display())))?;
    // Check the version before attempting a full decode so that a newer
    // format fails with a version error rather than a parse error.
    let probe: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|err| StoreError::Read(format!("{}: {err}", store_path.display())))?;
    let found = probe
        .get("formatVersion")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| {
            StoreError::Read(format!(
                "{}: missing formatVersion field",
                store_path.display()
            ))
        })? as u32;
    if found != STORE_FORMAT_VERSION {
        return Err(StoreError::VersionMismatch {
            found,
            expected: STORE_FORMAT_VERSION,
        });
    }
    let mut document: StoreDocument = serde_json::from_slice(&bytes)
        .map_err(|err| StoreError::Read(format!("{}: {err}", store_path.display())))?;
    document.interactions.sort_by_key(|i| i.sequence_id);
    Ok(InteractionStore {
        path: store_path.to_path_buf(),
        dump_fingerprint: document.dump_fingerprint,
        interactions: document.interactions,
    })
}

/// Load just the interactions, ordered by sequence id.
pub fn load_interactions(store_path: &Path) -> Result<Vec<HttpInteraction>, StoreError> {
    Ok(load_store(store_path)?.interactions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dump_ingest::{HttpRequestRecord, HttpResponseRecord, OperationMatch};
    use std::collections::BTreeMap;

    fn sample(sequence_id: u64) -> HttpInteraction {
        HttpInteraction {
            sequence_id,
            request: HttpRequestRecord {
                method: "GET".into(),
                raw_path: "/v2/pet".into(),
                query_parameters: BTreeMap::from([("status".to_string(), vec!["sold".to_string()])]),
                headers: vec![("Host".into(), "localhost:8080".into())],
                body: vec![0xff, 0x00, 0x7b],
                structured_body: None,
            },
            response: Some(HttpResponseRecord {
                status_code: 200,
                headers: vec![("Content-Type".into(), "application/json".into())],
                body: br#"{"ok": true}"#.to_vec(),
                structured_body: Some(serde_json::json!({"ok": true})),
            }),
            operation_match: Some(OperationMatch {
                template: "/pet".into(),
                method: "get".into(),
                method_supported: true,
            }),
            extracted_path_parameters: BTreeMap::new(),
        }
    }

    #[test]
    fn round_trip_preserves_interactions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        let interactions = vec![sample(2), sample(1)];
        persist_interactions(&path, &interactions, Some("sha256:abc")).unwrap();

        let store = load_store(&path).unwrap();
        assert_eq!(store.dump_fingerprint.as_deref(), Some("sha256:abc"));
        assert_eq!(store.interactions.len(), 2);
        // Ordered by sequence id regardless of input order.
        assert_eq!(store.interactions[0].sequence_id, 1);
        assert_eq!(store.interactions[0], sample(1));
        assert_eq!(store.interactions[1], sample(2));
    }

    #[test]
    fn empty_store_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        persist_interactions(&path, &[], None).unwrap();
        assert!(load_interactions(&path).unwrap().is_empty());
    }

    #[test]
    fn duplicate_sequence_ids_are_rejected_before_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        let err = persist_interactions(&path, &[sample(1), sample(1)], None).unwrap_err();
        assert!(matches!(err, StoreError::DuplicateSequenceId(1)));
        assert!(!path.exists());
    }

    #[test]
    fn missing_store_is_a_read_error() {
        assert!(matches!(
            load_interactions(Path::new("/nonexistent/store.json")),
            Err(StoreError::Read(_))
        ));
    }

    #[test]
    fn newer_format_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        std::fs::write(&path, br#"{"formatVersion": 2, "interactions": []}"#).unwrap();
        assert!(matches!(
            load_store(&path),
            Err(StoreError::VersionMismatch { found: 2, expected: 1 })
        ));
    }
}
