//! Name- and order-independent encoding of a document.
//!
//! Colors start from each Stn's local content and are refined with the colors
//! of neighbours until stable. Remaining ties are broken by individualizing one
//! member of the smallest tied class and refining again.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;
use sha2::{Digest, Sha256};

use super::serial::sorted;
use super::{serialize, ClockDomain, NAME_HINTS, CcrsDocument, Endpoint, Lwc, Metadata, Stn, StnKind};

type Color = [u8; 32];

fn hash(parts: &[&[u8]]) -> Color {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

/// Attrs without name hints. A clock domain is identified by its clock.
fn significant_attrs(doc: &CcrsDocument, s: &Stn) -> BTreeMap<String, serde_json::Value> {
    let mut attrs: BTreeMap<String, serde_json::Value> =
        s.attrs.iter().filter(|(k, _)| !NAME_HINTS.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect();
    if let Some(d) = attrs.get_mut("domain") {
        if let Some(c) = doc.clock_domains.iter().find(|c| Some(c.id.as_str()) == d.as_str()) {
            *d = json!(c.clock);
        }
    }
    attrs
}

fn local_color(doc: &CcrsDocument, s: &Stn) -> Color {
    let v = sorted(json!({
        "kind": s.kind,
        "opcode": s.opcode,
        "label": s.label,
        "attrs": significant_attrs(doc, s),
        "inputs": s.inputs,
        "outputs": s.outputs,
    }));
    hash(&[v.to_string().as_bytes()])
}

struct Graph {
    ids: Vec<String>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    /// Per node, per input pin: (source node, source pin).
    ins: Vec<Vec<Option<(usize, usize)>>>,
    /// Per node, per output pin: sinks (node, pin).
    outs: Vec<Vec<Vec<(usize, usize)>>>,
    kinds: Vec<StnKind>,
}

fn build(doc: &CcrsDocument) -> Graph {
    let all = doc.all_stns();
    let index: BTreeMap<&str, usize> = all.iter().enumerate().map(|(i, (s, _))| (s.id.as_str(), i)).collect();
    let mut g = Graph {
        ids: all.iter().map(|(s, _)| s.id.clone()).collect(),
        parent: all.iter().map(|(_, p)| p.map(|p| index[p.id.as_str()])).collect(),
        children: all.iter().map(|(s, _)| s.children.iter().map(|c| index[c.id.as_str()]).collect()).collect(),
        ins: all.iter().map(|(s, _)| vec![None; s.inputs.len()]).collect(),
        outs: all.iter().map(|(s, _)| vec![Vec::new(); s.outputs.len()]).collect(),
        kinds: all.iter().map(|(s, _)| s.kind).collect(),
    };
    for l in &doc.lwcs {
        let Some(&src) = index.get(l.source.stn.as_str()) else { continue };
        for e in &l.sinks {
            let Some(&dst) = index.get(e.stn.as_str()) else { continue };
            if let Some(slot) = g.ins[dst].get_mut(e.pin) {
                *slot = Some((src, l.source.pin));
            }
            if let Some(slot) = g.outs[src].get_mut(l.source.pin) {
                slot.push((dst, e.pin));
            }
        }
    }
    g
}

fn distinct(colors: &[Color]) -> usize {
    colors.iter().collect::<BTreeSet<_>>().len()
}

fn refine(g: &Graph, mut colors: Vec<Color>) -> Vec<Color> {
    let mut classes = distinct(&colors);
    loop {
        let next: Vec<Color> = (0..colors.len())
            .map(|n| {
                let mut buf = Vec::new();
                for src in &g.ins[n] {
                    match src {
                        Some((s, p)) => {
                            buf.extend_from_slice(&colors[*s]);
                            buf.extend_from_slice(&(*p as u64).to_le_bytes());
                        }
                        None => buf.extend_from_slice(b"open"),
                    }
                }
                buf.extend_from_slice(b"|");
                for sinks in &g.outs[n] {
                    let mut s: Vec<(Color, usize)> = sinks.iter().map(|(d, p)| (colors[*d], *p)).collect();
                    s.sort();
                    for (c, p) in s {
                        buf.extend_from_slice(&c);
                        buf.extend_from_slice(&(p as u64).to_le_bytes());
                    }
                    buf.extend_from_slice(b";");
                }
                buf.extend_from_slice(b"|");
                if let Some(p) = g.parent[n] {
                    buf.extend_from_slice(&colors[p]);
                }
                buf.extend_from_slice(b"|");
                let mut cs: Vec<Color> = g.children[n].iter().map(|c| colors[*c]).collect();
                cs.sort();
                for c in cs {
                    buf.extend_from_slice(&c);
                }
                hash(&[&colors[n], &buf])
            })
            .collect();
        let n = distinct(&next);
        colors = next;
        if n == classes {
            return colors;
        }
        classes = n;
    }
}

fn stable_colors(doc: &CcrsDocument, g: &Graph) -> Vec<Color> {
    let all = doc.all_stns();
    let mut colors = refine(g, all.iter().map(|(s, _)| local_color(doc, s)).collect());
    loop {
        let mut members: BTreeMap<Color, Vec<usize>> = BTreeMap::new();
        for (i, c) in colors.iter().enumerate() {
            members.entry(*c).or_default().push(i);
        }
        let Some(tied) = members.values().find(|m| m.len() > 1) else { return colors };
        let pick = tied[0];
        colors[pick] = hash(&[&colors[pick], b"individualized"]);
        colors = refine(g, colors);
    }
}

/// Longest path from sources, where Timing and Instance outputs restart at 0.
fn levels(g: &Graph) -> Vec<usize> {
    let n = g.ids.len();
    let mut level = vec![0usize; n];
    let mut indeg = vec![0usize; n];
    let cut = |s: usize| matches!(g.kinds[s], StnKind::Timing | StnKind::Instance);
    for s in 0..n {
        if cut(s) {
            continue;
        }
        for sinks in &g.outs[s] {
            for (d, _) in sinks {
                indeg[*d] += 1;
            }
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|i| indeg[*i] == 0).collect();
    while let Some(s) = ready.pop() {
        if cut(s) {
            continue;
        }
        for sinks in &g.outs[s] {
            for (d, _) in sinks {
                level[*d] = level[*d].max(level[s] + 1);
                indeg[*d] -= 1;
                if indeg[*d] == 0 {
                    ready.push(*d);
                }
            }
        }
    }
    level
}

/// Stn ids (nested ones included) in canonical order.
pub fn canonical_order(doc: &CcrsDocument) -> Vec<String> {
    let g = build(doc);
    let colors = stable_colors(doc, &g);
    let lv = levels(&g);
    let mut order: Vec<usize> = (0..g.ids.len()).collect();
    order.sort_by(|a, b| (lv[*a], colors[*a]).cmp(&(lv[*b], colors[*b])));
    order.into_iter().map(|i| g.ids[i].clone()).collect()
}

fn canonical_doc(doc: &CcrsDocument) -> CcrsDocument {
    let order = canonical_order(doc);
    let rank: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let rename: BTreeMap<&str, String> = doc
        .all_stns()
        .into_iter()
        .map(|(s, _)| {
            let new = if s.kind == StnKind::Port { s.id.clone() } else { format!("c{}", rank[s.id.as_str()]) };
            (s.id.as_str(), new)
        })
        .collect();

    fn rebuild(doc: &CcrsDocument, s: &Stn, rank: &BTreeMap<&str, usize>, rename: &BTreeMap<&str, String>) -> Stn {
        let mut kids: Vec<&Stn> = s.children.iter().collect();
        kids.sort_by_key(|c| rank[c.id.as_str()]);
        Stn {
            id: rename[s.id.as_str()].clone(),
            attrs: significant_attrs(doc, s),
            children: kids.into_iter().map(|c| rebuild(doc, c, rank, rename)).collect(),
            ..s.clone()
        }
    }
    let mut top: Vec<&Stn> = doc.stns.iter().collect();
    top.sort_by_key(|s| rank[s.id.as_str()]);
    let stns = top.into_iter().map(|s| rebuild(doc, s, &rank, &rename)).collect();

    let key = |e: &Endpoint| (rank.get(e.stn.as_str()).copied().unwrap_or(usize::MAX), e.pin);
    let mut lwcs: Vec<Lwc> = doc.lwcs.clone();
    for l in &mut lwcs {
        l.sinks.sort_by_key(|e| key(e));
    }
    lwcs.sort_by_key(|l| key(&l.source));
    let name = |id: &str| rename.get(id).cloned().unwrap_or_else(|| id.to_string());
    for (i, l) in lwcs.iter_mut().enumerate() {
        l.id = format!("w{i}");
        l.source.stn = name(&l.source.stn);
        for e in &mut l.sinks {
            e.stn = name(&e.stn);
        }
    }

    let mut clock_domains: Vec<ClockDomain> =
        doc.clock_domains.iter().map(|c| ClockDomain { id: c.clock.clone(), clock: c.clock.clone() }).collect();
    clock_domains.sort();
    let mut subs: Vec<CcrsDocument> = doc.metadata.submodules.iter().map(canonical_doc).collect();
    subs.sort_by(|a, b| a.module.cmp(&b.module));
    CcrsDocument {
        version: doc.version.clone(),
        module: doc.module.clone(),
        ports: doc.ports.clone(),
        stns,
        lwcs,
        clock_domains,
        metadata: Metadata { submodules: subs, ..Metadata::default() },
        geometry: None,
    }
}

/// Identical bytes for documents that are isomorphic up to generated ids and
/// list order. Port names, kinds, opcodes, labels, attrs and connectivity
/// are significant; geometry, trace metadata and name hints are not.
pub fn canonical_form(doc: &CcrsDocument) -> Vec<u8> {
    serialize(&canonical_doc(doc)).into_bytes()
}
