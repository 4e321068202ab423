use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::{CcrsDocument, PortDirection, Stn, StnKind};
use crate::diag::{Code, Diagnostic};
use crate::ops::{mask, Opcode};
use crate::templater::symbols;

/// Check every structural invariant. Returns one diagnostic per violation.
pub fn validate(doc: &CcrsDocument) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    check_module(doc, &doc.metadata.submodules, "", &mut diags);
    let mut names = BTreeSet::new();
    for sub in &doc.metadata.submodules {
        if !names.insert(sub.module.as_str()) || sub.module == doc.module {
            diags.push(Diagnostic::error(Code::DupId, format!("submodule {} appears twice", sub.module)));
        }
        check_module(sub, &doc.metadata.submodules, &format!("{}: ", sub.module), &mut diags);
    }
    diags
}

struct Ctx<'a> {
    prefix: &'a str,
    diags: &'a mut Vec<Diagnostic>,
}

impl Ctx<'_> {
    fn err(&mut self, code: Code, msg: String) {
        self.diags.push(Diagnostic::error(code, format!("{}{msg}", self.prefix)));
    }
}

fn check_module(doc: &CcrsDocument, lib: &[CcrsDocument], prefix: &str, diags: &mut Vec<Diagnostic>) {
    let mut cx = Ctx { prefix, diags };
    let all = doc.all_stns();

    let mut ids = BTreeSet::new();
    for (s, _) in &all {
        if !ids.insert(s.id.as_str()) {
            cx.err(Code::DupId, format!("duplicate Stn id {}", s.id));
        }
    }
    let mut lwc_ids = BTreeSet::new();
    for l in &doc.lwcs {
        if !lwc_ids.insert(l.id.as_str()) {
            cx.err(Code::DupId, format!("duplicate Lwc id {}", l.id));
        }
    }

    check_ports(doc, &mut cx);
    let domains: BTreeSet<&str> = doc.clock_domains.iter().map(|d| d.id.as_str()).collect();
    if domains.len() != doc.clock_domains.len() {
        cx.err(Code::DupId, "duplicate clock domain id".into());
    }
    for d in &doc.clock_domains {
        let ok = doc.ports.iter().any(|p| p.name == d.clock && p.direction == PortDirection::Input && p.width == 1);
        if !ok {
            cx.err(Code::NoDomain, format!("clock domain {} names {} which is not a 1-bit input port", d.id, d.clock));
        }
    }

    for (s, parent) in &all {
        check_stn(s, doc, lib, &domains, &mut cx);
        if let Some(p) = parent {
            if !matches!(p.kind, StnKind::Branch | StnKind::CaseSelect) || !matches!(s.kind, StnKind::Branch | StnKind::CaseSelect) {
                cx.err(Code::Nesting, format!("{} cannot be nested under {}", s.id, p.id));
            }
        }
    }

    check_lwcs(doc, &mut cx);
    check_nesting(doc, &mut cx);
    if cx.diags.iter().all(|d| !matches!(d.code, Code::DanglingRef | Code::DupId)) {
        if let Some(cycle) = comb_cycle(doc, lib) {
            cx.err(Code::CombCycle, format!("combinational cycle through {{{}}}", cycle.join(", ")));
        }
    }
}

fn check_ports(doc: &CcrsDocument, cx: &mut Ctx) {
    let mut names = BTreeSet::new();
    for p in &doc.ports {
        if !names.insert(p.name.as_str()) {
            cx.err(Code::PortList, format!("port {} listed twice", p.name));
        }
        let id = CcrsDocument::port_stn_id(&p.name);
        let count = doc.stns.iter().filter(|s| s.kind == StnKind::Port && s.id == id).count();
        if count != 1 {
            cx.err(Code::PortList, format!("port {} needs exactly one Port Stn {id}", p.name));
        }
    }
    for (s, _) in doc.all_stns() {
        if s.kind == StnKind::Port && !doc.ports.iter().any(|p| CcrsDocument::port_stn_id(&p.name) == s.id) {
            cx.err(Code::PortList, format!("Port Stn {} has no matching module port", s.id));
        }
    }
}

fn check_stn(s: &Stn, doc: &CcrsDocument, lib: &[CcrsDocument], domains: &BTreeSet<&str>, cx: &mut Ctx) {
    let id = &s.id;
    let shape = |cx: &mut Ctx, msg: &str| cx.err(Code::Shape, format!("{id}: {msg}"));
    if s.kind != StnKind::DataOp && s.opcode.is_some() {
        shape(cx, "only DataOp carries an opcode");
    }
    if s.inputs.iter().chain(&s.outputs).any(|p| p.width == 0 || p.width > 64) {
        cx.err(Code::Width, format!("{id}: pin widths must be 1..=64"));
    }
    if !s.children.is_empty() && !matches!(s.kind, StnKind::Branch | StnKind::CaseSelect) {
        cx.err(Code::Nesting, format!("{id}: only Branch and CaseSelect have children"));
    }
    let expected_label: Option<String> = match s.kind {
        StnKind::Port => {
            match doc.ports.iter().find(|p| CcrsDocument::port_stn_id(&p.name) == *id) {
                Some(p) => {
                    let ok = match p.direction {
                        PortDirection::Input => s.inputs.is_empty() && s.outputs.len() == 1 && s.outputs[0].width == p.width,
                        PortDirection::Output => s.outputs.is_empty() && s.inputs.len() == 1 && s.inputs[0].width == p.width,
                    };
                    if !ok {
                        shape(cx, "a Port has exactly one pin, on the side opposite its direction, of the port width");
                    }
                }
                None => {
                    if s.inputs.len() + s.outputs.len() != 1 {
                        shape(cx, "a Port has exactly one pin");
                    }
                }
            }
            Some(id.strip_prefix("port.").unwrap_or(id).to_string())
        }
        StnKind::Constant => {
            if !s.inputs.is_empty() || s.outputs.len() != 1 {
                shape(cx, "a Constant has no inputs and one output");
            } else {
                match s.attr_u64("value") {
                    Some(v) if v & !mask(s.outputs[0].width) == 0 => {}
                    _ => shape(cx, "constant value missing or wider than its output"),
                }
            }
            Some(symbols::CONSTANT.into())
        }
        StnKind::DataOp => match s.opcode {
            None => {
                shape(cx, "DataOp without opcode");
                None
            }
            Some(op) => {
                if !op.arity().accepts(s.inputs.len()) || s.outputs.len() != 1 {
                    shape(cx, &format!("{op:?} does not take {} inputs", s.inputs.len()));
                } else {
                    let widths: Vec<u32> = s.inputs.iter().map(|p| p.width).collect();
                    let slice = s.slice_range();
                    if op == Opcode::Slice && slice.is_none() {
                        shape(cx, "Slice needs msb and lsb attrs");
                    } else if matches!(op, Opcode::Shl | Opcode::Shr) && s.attr_u64("amount").is_none() {
                        shape(cx, "shift needs an amount attr");
                    } else if op.result_width(&widths, slice) != Some(s.outputs[0].width) {
                        cx.err(Code::OpWidth, format!("{id}: output width {} breaks the {op:?} width rule", s.outputs[0].width));
                    }
                }
                Some(symbols::glyph(op).into())
            }
        },
        StnKind::Branch => {
            check_rows(s, cx);
            Some(symbols::COND.into())
        }
        StnKind::CaseSelect => {
            check_rows(s, cx);
            Some(symbols::SELECT.into())
        }
        StnKind::Timing => {
            if s.inputs.len() != 1 || s.outputs.len() != 1 || s.inputs[0].width != s.outputs[0].width {
                shape(cx, "a Timing Stn has one input and one output of equal width");
            }
            match s.attr_str("domain") {
                Some(d) if domains.contains(d) => {}
                Some(d) => cx.err(Code::NoDomain, format!("{id}: clock domain {d} is not declared")),
                None => cx.err(Code::NoDomain, format!("{id}: Timing Stn without clock domain")),
            }
            Some(symbols::REGISTER.into())
        }
        StnKind::Instance => {
            match s.attr_str("module") {
                None => cx.err(Code::UnknownModule, format!("{id}: instance without module attr")),
                Some(m) => match lib.iter().find(|d| d.module == m) {
                    None => cx.err(Code::UnknownModule, format!("{id}: unknown module {m}")),
                    Some(child) => {
                        let pins = |dir| child.ports.iter().filter(move |p| p.direction == dir).map(|p| (p.name.as_str(), p.width));
                        let ins: Vec<_> = s.inputs.iter().map(|p| (p.name.as_str(), p.width)).collect();
                        let outs: Vec<_> = s.outputs.iter().map(|p| (p.name.as_str(), p.width)).collect();
                        if ins != pins(PortDirection::Input).collect::<Vec<_>>() || outs != pins(PortDirection::Output).collect::<Vec<_>>() {
                            cx.err(Code::InstanceInterface, format!("{id}: pins do not mirror the ports of {m}"));
                        }
                    }
                },
            }
            Some(symbols::MODULE.into())
        }
    };
    if s.label.is_empty() {
        cx.err(Code::Label, format!("{id}: empty label"));
    } else if let Some(want) = expected_label {
        if s.label != want {
            cx.err(Code::Label, format!("{id}: label {} should be {want}", s.label));
        }
    }
}

fn check_rows(s: &Stn, cx: &mut Ctx) {
    let id = &s.id;
    let Some(rows) = s.rows() else {
        cx.err(Code::Rows, format!("{id}: missing or malformed rows"));
        return;
    };
    if s.outputs.len() != 1 {
        cx.err(Code::Shape, format!("{id}: exactly one output"));
        return;
    }
    let out_w = s.outputs[0].width;
    let is_case = s.kind == StnKind::CaseSelect;
    if rows.is_empty() {
        cx.err(Code::Rows, format!("{id}: at least one row"));
        return;
    }
    let defaults = rows.iter().filter(|r| r.is_default()).count();
    if defaults > 1 || (defaults == 1 && !rows.last().unwrap().is_default()) {
        cx.err(Code::Rows, format!("{id}: at most one default row, and it must be last"));
    }
    if !is_case && (defaults != 1 || rows.len() < 2) {
        cx.err(Code::Rows, format!("{id}: a Branch needs condition rows and exactly one default row"));
    }
    let mut used: Vec<&str> = Vec::new();
    if is_case {
        if s.inputs.first().map(|p| p.name.as_str()) != Some("sel") {
            cx.err(Code::Shape, format!("{id}: first input must be sel"));
            return;
        }
        used.push("sel");
    }
    let mut seen_labels = BTreeSet::new();
    let sel_w = s.inputs[0].width;
    for r in &rows {
        if is_case && r.cond.is_some() || !is_case && r.labels.is_some() {
            cx.err(Code::Rows, format!("{id}: row kind does not match Stn kind"));
            continue;
        }
        if let Some(c) = &r.cond {
            match s.input_index(c) {
                Some(i) if s.inputs[i].width == 1 => {}
                Some(_) => cx.err(Code::Width, format!("{id}: condition {c} must be 1 bit")),
                None => cx.err(Code::Rows, format!("{id}: row names missing input {c}")),
            }
            used.push(c);
        }
        if let Some(labels) = &r.labels {
            if labels.is_empty() {
                cx.err(Code::Rows, format!("{id}: case row without labels"));
            }
            for l in labels {
                if *l & !mask(sel_w) != 0 {
                    cx.err(Code::Rows, format!("{id}: label {l} does not fit the selector"));
                }
                if !seen_labels.insert(*l) {
                    cx.err(Code::DupCase, format!("{id}: duplicate case label {l}"));
                }
            }
        }
        match s.input_index(&r.value) {
            Some(i) if s.inputs[i].width == out_w => {}
            Some(_) => cx.err(Code::Width, format!("{id}: value {} must match the output width", r.value)),
            None => cx.err(Code::Rows, format!("{id}: row names missing input {}", r.value)),
        }
        used.push(&r.value);
    }
    let mut sorted_used = used.clone();
    sorted_used.sort();
    sorted_used.dedup();
    if sorted_used.len() != used.len() || used.len() != s.inputs.len() {
        cx.err(Code::Rows, format!("{id}: every input must be used by exactly one row slot"));
    }
    if is_case && defaults == 0 && !(sel_w < 16 && seen_labels.len() as u64 == 1u64 << sel_w) {
        cx.err(Code::CaseCoverage, format!("{id}: case without default must cover every selector value"));
    }
}

fn check_lwcs(doc: &CcrsDocument, cx: &mut Ctx) {
    let stns = doc.stn_map();
    let mut driven: BTreeMap<(&str, usize), usize> = BTreeMap::new();
    let mut sourced: BTreeMap<(&str, usize), usize> = BTreeMap::new();
    for l in &doc.lwcs {
        if l.sinks.is_empty() {
            cx.err(Code::NoSink, format!("Lwc {} has no sink", l.id));
        }
        match stns.get(l.source.stn.as_str()).and_then(|s| s.outputs.get(l.source.pin)) {
            None => cx.err(Code::DanglingRef, format!("Lwc {} source {}:{} does not exist", l.id, l.source.stn, l.source.pin)),
            Some(p) => {
                *sourced.entry((l.source.stn.as_str(), l.source.pin)).or_default() += 1;
                if p.width != l.width {
                    cx.err(Code::Width, format!("Lwc {} is {} bits but its source is {}", l.id, l.width, p.width));
                }
            }
        }
        for e in &l.sinks {
            match stns.get(e.stn.as_str()).and_then(|s| s.inputs.get(e.pin)) {
                None => cx.err(Code::DanglingRef, format!("Lwc {} sink {}:{} does not exist", l.id, e.stn, e.pin)),
                Some(p) => {
                    *driven.entry((e.stn.as_str(), e.pin)).or_default() += 1;
                    if p.width != l.width {
                        cx.err(Code::Width, format!("Lwc {} is {} bits but sink {}:{} is {}", l.id, l.width, e.stn, e.pin, p.width));
                    }
                }
            }
        }
    }
    for (s, _) in doc.all_stns() {
        for (i, p) in s.inputs.iter().enumerate() {
            let n = driven.get(&(s.id.as_str(), i)).copied().unwrap_or(0);
            if n != 1 {
                cx.err(Code::PinDriver, format!("input {}.{} has {n} drivers", s.id, p.name));
            }
        }
        for (i, p) in s.outputs.iter().enumerate() {
            if sourced.get(&(s.id.as_str(), i)).copied().unwrap_or(0) > 1 {
                cx.err(Code::PinDriver, format!("output {}.{} is the source of several Lwcs", s.id, p.name));
            }
        }
    }
}

/// A child's single output must feed exactly one value slot of its parent.
fn check_nesting(doc: &CcrsDocument, cx: &mut Ctx) {
    for (s, parent) in doc.all_stns() {
        let Some(p) = parent else { continue };
        let outs: Vec<_> = doc.lwcs.iter().filter(|l| l.source.stn == s.id).collect();
        let ok = match outs.as_slice() {
            [l] if l.sinks.len() == 1 && l.sinks[0].stn == p.id => {
                let pin = p.inputs.get(l.sinks[0].pin).map(|x| x.name.as_str());
                p.rows().unwrap_or_default().iter().any(|r| Some(r.value.as_str()) == pin)
            }
            _ => false,
        };
        if !ok {
            cx.err(Code::Nesting, format!("{} must feed exactly one value slot of its parent {}", s.id, p.id));
        }
    }
}

/// Node key for the pin-level dependency graph. Instances are split into one
/// node per pin so that their internal dependencies can be modelled precisely.
fn source_node(s: &Stn, pin: usize) -> String {
    if s.kind == StnKind::Instance {
        format!("{}#o{pin}", s.id)
    } else {
        s.id.clone()
    }
}

fn sink_node(s: &Stn, pin: usize) -> String {
    if s.kind == StnKind::Instance {
        format!("{}#i{pin}", s.id)
    } else {
        s.id.clone()
    }
}

fn dependency_edges(doc: &CcrsDocument, lib: &[CcrsDocument], visiting: &mut Vec<String>) -> Vec<(String, String)> {
    let stns = doc.stn_map();
    let mut edges = Vec::new();
    for l in &doc.lwcs {
        let Some(src) = stns.get(l.source.stn.as_str()) else { continue };
        if src.kind == StnKind::Timing {
            continue;
        }
        for e in &l.sinks {
            let Some(dst) = stns.get(e.stn.as_str()) else { continue };
            edges.push((source_node(src, l.source.pin), sink_node(dst, e.pin)));
        }
    }
    for (s, _) in doc.all_stns() {
        if s.kind != StnKind::Instance {
            continue;
        }
        let module = s.attr_str("module").unwrap_or_default();
        let summary = match lib.iter().find(|d| d.module == module) {
            Some(child) if !visiting.iter().any(|v| v == module) => {
                visiting.push(module.to_string());
                let sum = comb_summary(child, lib, visiting);
                visiting.pop();
                Some(sum)
            }
            _ => None,
        };
        for (o, op) in s.outputs.iter().enumerate() {
            for (i, ip) in s.inputs.iter().enumerate() {
                let dep = summary.as_ref().is_none_or(|m| m.get(&op.name).is_some_and(|d| d.contains(&ip.name)));
                if dep {
                    edges.push((sink_node(s, i), source_node(s, o)));
                }
            }
        }
    }
    edges
}

/// For each output port, the input ports it depends on combinationally.
pub(crate) fn comb_summary(doc: &CcrsDocument, lib: &[CcrsDocument], visiting: &mut Vec<String>) -> BTreeMap<String, BTreeSet<String>> {
    let edges = dependency_edges(doc, lib, visiting);
    let mut preds: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in &edges {
        preds.entry(b.as_str()).or_default().push(a.as_str());
    }
    let mut out = BTreeMap::new();
    for p in doc.ports.iter().filter(|p| p.direction == PortDirection::Output) {
        let start = CcrsDocument::port_stn_id(&p.name);
        let mut seen = BTreeSet::new();
        let mut stack = vec![start.as_str()];
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(preds.get(n).into_iter().flatten().copied());
            }
        }
        let deps = doc
            .ports
            .iter()
            .filter(|q| q.direction == PortDirection::Input && seen.contains(CcrsDocument::port_stn_id(&q.name).as_str()))
            .map(|q| q.name.clone())
            .collect();
        out.insert(p.name.clone(), deps);
    }
    out
}

fn comb_cycle(doc: &CcrsDocument, lib: &[CcrsDocument]) -> Option<Vec<String>> {
    let edges = dependency_edges(doc, lib, &mut vec![doc.module.clone()]);
    let mut g: DiGraph<&str, ()> = DiGraph::new();
    let mut idx: BTreeMap<&str, NodeIndex> = BTreeMap::new();
    for (a, b) in &edges {
        for n in [a.as_str(), b.as_str()] {
            if !idx.contains_key(n) {
                idx.insert(n, g.add_node(n));
            }
        }
        g.add_edge(idx[a.as_str()], idx[b.as_str()], ());
    }
    let mut cycles: Vec<Vec<String>> = tarjan_scc(&g)
        .into_iter()
        .filter(|c| c.len() > 1 || g.contains_edge(c[0], c[0]))
        .map(|c| {
            let names: BTreeSet<String> =
                c.iter().map(|i| g[*i].split('#').next().unwrap_or_default().to_string()).collect();
            names.into_iter().collect()
        })
        .collect();
    cycles.sort();
    cycles.into_iter().next()
}
