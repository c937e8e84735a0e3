//! Per-element detail sets, grouped the way the detail reports present
//! them: by path, then by method, methods in the fixed order
//! `get, post, put, delete, patch, head, options`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::spec_model::StatusClass;

/// A lowercase method name ordered by the report's fixed method order
/// rather than alphabetically; unknown methods sort last, alphabetically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodKey(String);

impl MethodKey {
    pub fn new(method: String) -> Self {
        MethodKey(method)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn rank(&self) -> usize {
        const ORDER: [&str; 7] = ["get", "post", "put", "delete", "patch", "head", "options"];
        ORDER.iter().position(|m| *m == self.0).unwrap_or(ORDER.len())
    }
}

impl Ord for MethodKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank().cmp(&other.rank()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MethodKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for MethodKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

/// One of the three sections of a detail report. The shape depends on the
/// metric: path and operation metrics map paths to method lists; the
/// others nest one more level under the method.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum DetailSet {
    /// path -> [method]
    Methods(BTreeMap<String, BTreeSet<MethodKey>>),
    /// path -> method -> [name] (parameters, content types)
    Names(BTreeMap<String, BTreeMap<MethodKey, BTreeSet<String>>>),
    /// path -> method -> name -> [value]
    Values(BTreeMap<String, BTreeMap<MethodKey, BTreeMap<String, BTreeSet<String>>>>),
    /// path -> method -> [status code]
    Codes(BTreeMap<String, BTreeMap<MethodKey, BTreeSet<u16>>>),
}

impl DetailSet {
    pub fn empty_methods() -> DetailSet {
        DetailSet::Methods(BTreeMap::new())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("detail sets always serialize")
    }

    pub fn is_empty(&self) -> bool {
        match self {
            DetailSet::Methods(m) => m.is_empty(),
            DetailSet::Names(m) => m.is_empty(),
            DetailSet::Values(m) => m.is_empty(),
            DetailSet::Codes(m) => m.is_empty(),
        }
    }
}

pub(super) fn methods_of(elements: &BTreeSet<(String, String)>) -> DetailSet {
    let mut out: BTreeMap<String, BTreeSet<MethodKey>> = BTreeMap::new();
    for (template, method) in elements {
        out.entry(template.clone())
            .or_default()
            .insert(MethodKey::new(method.clone()));
    }
    DetailSet::Methods(out)
}

pub(super) fn names_of(elements: &BTreeSet<(String, String, String)>) -> DetailSet {
    let mut out: BTreeMap<String, BTreeMap<MethodKey, BTreeSet<String>>> = BTreeMap::new();
    for (template, method, name) in elements {
        out.entry(template.clone())
            .or_default()
            .entry(MethodKey::new(method.clone()))
            .or_default()
            .insert(name.clone());
    }
    DetailSet::Names(out)
}

pub(super) fn values_of(elements: &BTreeSet<(String, String, String, String)>) -> DetailSet {
    let mut out: BTreeMap<String, BTreeMap<MethodKey, BTreeMap<String, BTreeSet<String>>>> =
        BTreeMap::new();
    for (template, method, name, value) in elements {
        out.entry(template.clone())
            .or_default()
            .entry(MethodKey::new(method.clone()))
            .or_default()
            .entry(name.clone())
            .or_default()
            .insert(value.clone());
    }
    DetailSet::Values(out)
}

pub(super) fn codes_of(elements: &BTreeSet<(String, String, u16)>) -> DetailSet {
    let mut out: BTreeMap<String, BTreeMap<MethodKey, BTreeSet<u16>>> = BTreeMap::new();
    for (template, method, code) in elements {
        out.entry(template.clone())
            .or_default()
            .entry(MethodKey::new(method.clone()))
            .or_default()
            .insert(*code);
    }
    DetailSet::Codes(out)
}

pub(super) fn classes_of(elements: &BTreeSet<(String, String, StatusClass)>) -> DetailSet {
    let mut out: BTreeMap<String, BTreeMap<MethodKey, BTreeSet<String>>> = BTreeMap::new();
    for (template, method, class) in elements {
        out.entry(template.clone())
            .or_default()
            .entry(MethodKey::new(method.clone()))
            .or_default()
            .insert(class.as_str().to_string());
    }
    DetailSet::Names(out)
}
