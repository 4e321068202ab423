//! The chart document: nodes (Stn), nets (Lwc), ports and clock domains.

mod canon;
mod geometry;
mod serial;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::diag::Span;
use crate::ops::Opcode;

pub use canon::{canonical_form, canonical_order};
pub use geometry::{Geometry, Point, Rect, StnAnchors};
pub use serial::{deserialize, serialize};
pub use validate::validate;

pub const FORMAT_VERSION: &str = "ccrs-doc/1";

/// Attrs that only suggest HDL names (`target` on Timing, `name` on Instance).
/// They are ignored by [`canonical_form`].
pub const NAME_HINTS: &[&str] = &["name", "target"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum StnKind {
    Port,
    Constant,
    DataOp,
    Branch,
    CaseSelect,
    Timing,
    Instance,
}

impl StnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StnKind::Port => "port",
            StnKind::Constant => "constant",
            StnKind::DataOp => "dataOp",
            StnKind::Branch => "branch",
            StnKind::CaseSelect => "caseSelect",
            StnKind::Timing => "timing",
            StnKind::Instance => "instance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pin {
    pub name: String,
    pub width: u32,
}

impl Pin {
    pub fn new(name: impl Into<String>, width: u32) -> Self {
        Self { name: name.into(), width }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stn {
    pub id: String,
    pub kind: StnKind,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opcode: Option<Opcode>,
    pub inputs: Vec<Pin>,
    pub outputs: Vec<Pin>,
    #[serde(default)]
    pub children: Vec<Stn>,
    #[serde(default)]
    pub attrs: BTreeMap<String, Value>,
}

impl Stn {
    pub fn new(id: impl Into<String>, kind: StnKind, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind,
            label: label.into(),
            opcode: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            children: Vec::new(),
            attrs: BTreeMap::new(),
        }
    }

    pub fn attr_str(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).and_then(Value::as_str)
    }

    pub fn attr_u64(&self, key: &str) -> Option<u64> {
        self.attrs.get(key).and_then(Value::as_u64)
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|p| p.name == name)
    }

    /// `(msb, lsb)` of a Slice DataOp.
    pub fn slice_range(&self) -> Option<(u32, u32)> {
        Some((self.attr_u64("msb")? as u32, self.attr_u64("lsb")? as u32))
    }

    /// Visit this Stn and its descendants, parents first.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stn, Option<&'a Stn>)) {
        fn go<'a>(s: &'a Stn, parent: Option<&'a Stn>, f: &mut impl FnMut(&'a Stn, Option<&'a Stn>)) {
            f(s, parent);
            for c in &s.children {
                go(c, Some(s), f);
            }
        }
        go(self, None, f);
    }

    /// Parsed rows of a Branch (`cond` present) or CaseSelect (`labels` present).
    pub fn rows(&self) -> Option<Vec<Row>> {
        let rows = self.attrs.get("rows")?.as_array()?;
        rows.iter().map(Row::from_value).collect()
    }
}

/// One row of a Branch or CaseSelect. The default row has neither `cond`
/// nor `labels` and is always last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub cond: Option<String>,
    pub labels: Option<Vec<u64>>,
    pub value: String,
}

impl Row {
    pub fn is_default(&self) -> bool {
        self.cond.is_none() && self.labels.is_none()
    }

    fn from_value(v: &Value) -> Option<Row> {
        let obj = v.as_object()?;
        if obj.keys().any(|k| !matches!(k.as_str(), "cond" | "labels" | "value")) {
            return None;
        }
        let cond = match obj.get("cond") {
            Some(c) => Some(c.as_str()?.to_string()),
            None => None,
        };
        let labels = match obj.get("labels") {
            Some(l) => Some(l.as_array()?.iter().map(Value::as_u64).collect::<Option<Vec<_>>>()?),
            None => None,
        };
        Some(Row { cond, labels, value: obj.get("value")?.as_str()?.to_string() })
    }

    pub fn to_value(&self) -> Value {
        let mut m = serde_json::Map::new();
        if let Some(c) = &self.cond {
            m.insert("cond".into(), Value::from(c.clone()));
        }
        if let Some(l) = &self.labels {
            m.insert("labels".into(), Value::from(l.clone()));
        }
        m.insert("value".into(), Value::from(self.value.clone()));
        Value::Object(m)
    }
}

/// A pin on an Stn: `pin` indexes the Stn's outputs for a source and its
/// inputs for a sink.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoint {
    pub stn: String,
    pub pin: usize,
}

impl Endpoint {
    pub fn new(stn: impl Into<String>, pin: usize) -> Self {
        Self { stn: stn.into(), pin }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lwc {
    pub id: String,
    pub width: u32,
    pub source: Endpoint,
    pub sinks: Vec<Endpoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortDirection {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocPort {
    pub name: String,
    pub direction: PortDirection,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockDomain {
    pub id: String,
    pub clock: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metadata {
    /// Stn id to the HDL span it was lowered from.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub trace: BTreeMap<String, Span>,
    /// Documents of every module instantiated below this one, sorted by name.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub submodules: Vec<CcrsDocument>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct CcrsDocument {
    pub version: String,
    pub module: String,
    pub ports: Vec<DocPort>,
    pub stns: Vec<Stn>,
    pub lwcs: Vec<Lwc>,
    pub clock_domains: Vec<ClockDomain>,
    #[serde(default)]
    pub metadata: Metadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
}

impl CcrsDocument {
    pub fn new(module: impl Into<String>) -> Self {
        Self {
            version: FORMAT_VERSION.to_string(),
            module: module.into(),
            ports: Vec::new(),
            stns: Vec::new(),
            lwcs: Vec::new(),
            clock_domains: Vec::new(),
            metadata: Metadata::default(),
            geometry: None,
        }
    }

    /// Every Stn including nested ones, parents before children, with parent.
    pub fn all_stns(&self) -> Vec<(&Stn, Option<&Stn>)> {
        let mut out = Vec::new();
        for s in &self.stns {
            s.walk(&mut |s, p| out.push((s, p)));
        }
        out
    }

    pub fn stn(&self, id: &str) -> Option<&Stn> {
        self.all_stns().into_iter().map(|(s, _)| s).find(|s| s.id == id)
    }

    pub fn stn_map(&self) -> BTreeMap<&str, &Stn> {
        self.all_stns().into_iter().map(|(s, _)| (s.id.as_str(), s)).collect()
    }

    pub fn stn_mut(&mut self, id: &str) -> Option<&mut Stn> {
        fn find<'a>(list: &'a mut [Stn], id: &str) -> Option<&'a mut Stn> {
            for s in list {
                if s.id == id {
                    return Some(s);
                }
                if let Some(x) = find(&mut s.children, id) {
                    return Some(x);
                }
            }
            None
        }
        find(&mut self.stns, id)
    }

    /// The Lwc driving input `pin` of `stn`, if any.
    pub fn driver(&self, stn: &str, pin: usize) -> Option<&Lwc> {
        self.lwcs.iter().find(|l| l.sinks.iter().any(|e| e.stn == stn && e.pin == pin))
    }

    /// Map from sink endpoint to index of the Lwc driving it.
    pub fn driver_map(&self) -> BTreeMap<&Endpoint, usize> {
        let mut out = BTreeMap::new();
        for (i, l) in self.lwcs.iter().enumerate() {
            for s in &l.sinks {
                out.insert(s, i);
            }
        }
        out
    }

    /// Map from source endpoint to index of the Lwc it drives.
    pub fn source_map(&self) -> BTreeMap<&Endpoint, usize> {
        self.lwcs.iter().enumerate().map(|(i, l)| (&l.source, i)).collect()
    }

    pub fn port_stn_id(name: &str) -> String {
        format!("port.{name}")
    }

    pub fn submodule(&self, name: &str) -> Option<&CcrsDocument> {
        self.metadata.submodules.iter().find(|d| d.module == name)
    }

    /// True when this module or any module below it has a clock domain.
    pub fn is_sequential(&self) -> bool {
        !self.clock_domains.is_empty() || self.metadata.submodules.iter().any(|d| !d.clock_domains.is_empty())
    }
}
