use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

use super::{CcrsDocument, FORMAT_VERSION};
use crate::diag::{Code, Diagnostic};

/// Compact JSON with sorted keys; equal documents give identical bytes.
pub fn serialize(doc: &CcrsDocument) -> String {
    let value = sorted(serde_json::to_value(doc).expect("documents always serialize"));
    serde_json::to_string(&value).expect("values always serialize")
}

/// Rebuild objects with keys inserted in sorted order, whatever map backs them.
pub(crate) fn sorted(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let entries: BTreeMap<String, Value> = m.into_iter().map(|(k, v)| (k, sorted(v))).collect();
            Value::Object(entries.into_iter().collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sorted).collect()),
        other => other,
    }
}

pub fn deserialize(text: &str) -> Result<CcrsDocument, Vec<Diagnostic>> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| vec![Diagnostic::error(Code::Schema, format!("malformed document: {e}"))])?;
    match value.get("version").and_then(|v| v.as_str()) {
        Some(FORMAT_VERSION) => {}
        Some(v) => {
            return Err(vec![Diagnostic::error(Code::Version, format!("unsupported format version {v:?}, expected {FORMAT_VERSION:?}"))])
        }
        None => return Err(vec![Diagnostic::error(Code::Version, "missing format version")]),
    }
    let doc: CcrsDocument =
        serde_json::from_value(value).map_err(|e| vec![Diagnostic::error(Code::Schema, format!("schema violation: {e}"))])?;
    let mut diags = Vec::new();
    check_ids(&doc, &mut diags);
    if diags.is_empty() {
        Ok(doc)
    } else {
        Err(diags)
    }
}

fn check_ids(doc: &CcrsDocument, diags: &mut Vec<Diagnostic>) {
    let mut seen = BTreeSet::new();
    for (s, _) in doc.all_stns() {
        if !seen.insert(s.id.as_str()) {
            diags.push(Diagnostic::error(Code::DupId, format!("duplicate Stn id {}", s.id)));
        }
    }
    let mut seen = BTreeSet::new();
    for l in &doc.lwcs {
        if !seen.insert(l.id.as_str()) {
            diags.push(Diagnostic::error(Code::DupId, format!("duplicate Lwc id {}", l.id)));
        }
    }
    for sub in &doc.metadata.submodules {
        check_ids(sub, diags);
    }
}
