//! Layered left-to-right layout: layer assignment, barycenter crossing
//! reduction, box placement, orthogonal trunk-and-branch routing and clock
//! domain regions.
//!
//! Only top-level Stns take part in layering; nested Stns sit inside their
//! parent's box and share its layer. Every wire bend lies in a box-free
//! channel between layer columns, in a dummy slot reserved inside a column,
//! on a bypass line above the drawing, or in the lanes inside a parent box.

use std::collections::{BTreeMap, BTreeSet};

use crate::ir::{canonical_order, CcrsDocument, Geometry, Point, Rect, Stn, StnAnchors, StnKind};

pub const PORT_PITCH: i64 = 16;
pub const MIN_BOX_W: i64 = 48;
pub const MIN_BOX_H: i64 = 32;
/// Minimum horizontal channel between layer columns.
pub const LAYER_GAP: i64 = 64;
pub const TRACK_SPACING: i64 = 8;
pub const REGION_MARGIN: i64 = 12;
/// Blank border around the drawing.
pub const MARGIN: i64 = 24;
/// Vertical gap between stacked boxes. Larger than two region margins, so
/// regions of different domains do not touch.
pub const STACK_GAP: i64 = 32;
/// Padding inside a parent around and between its children.
pub const PAD: i64 = 8;
/// Lane inside a parent, left of its children.
pub const LEFT_LANE: i64 = 16;

/// Width a label needs: 16 units per CJK glyph, 8 per ASCII character, plus padding.
pub fn label_extent(label: &str) -> i64 {
    label.chars().map(|c| if c.is_ascii() { 8 } else { 16 }).sum::<i64>() + 2 * PAD
}

/// Height of the band holding a box's own pins.
fn header_height(s: &Stn) -> i64 {
    MIN_BOX_H.max(s.inputs.len().max(s.outputs.len()) as i64 * PORT_PITCH)
}

/// Box size, including room for nested children.
pub fn box_size(s: &Stn) -> (i64, i64) {
    let w = MIN_BOX_W.max(label_extent(&s.label));
    let h = header_height(s);
    if s.children.is_empty() {
        return (w, h);
    }
    let sizes: Vec<(i64, i64)> = s.children.iter().map(box_size).collect();
    let inner_w = sizes.iter().map(|(w, _)| *w).max().unwrap_or(0);
    let right_lane = TRACK_SPACING * (s.children.len() as i64 + 1);
    let w = w.max(LEFT_LANE + inner_w + right_lane);
    let h = h + sizes.iter().map(|(_, h)| h + PAD).sum::<i64>() + PAD;
    (w, h)
}

struct Graph<'a> {
    doc: &'a CcrsDocument,
    /// Any Stn id to its top-level ancestor.
    top: BTreeMap<&'a str, &'a str>,
    parent: BTreeMap<&'a str, &'a str>,
    /// Tie-break rank: input and output ports in declaration order, then canonical order.
    rank: BTreeMap<&'a str, usize>,
}

impl<'a> Graph<'a> {
    fn new(doc: &'a CcrsDocument) -> Self {
        let mut top = BTreeMap::new();
        let mut parent = BTreeMap::new();
        for t in &doc.stns {
            t.walk(&mut |s, p| {
                top.insert(s.id.as_str(), t.id.as_str());
                if let Some(p) = p {
                    parent.insert(s.id.as_str(), p.id.as_str());
                }
            });
        }
        let ids: BTreeMap<String, &'a str> = top.keys().map(|k| (k.to_string(), *k)).collect();
        let mut rank = BTreeMap::new();
        for (i, p) in doc.ports.iter().enumerate() {
            if let Some(id) = ids.get(&CcrsDocument::port_stn_id(&p.name)) {
                rank.insert(*id, i);
            }
        }
        for (i, id) in canonical_order(doc).iter().enumerate() {
            if let Some(k) = ids.get(id) {
                rank.entry(*k).or_insert(doc.ports.len() + i);
            }
        }
        Self { doc, top, parent, rank }
    }

    fn kind(&self, id: &str) -> Option<StnKind> {
        self.doc.stns.iter().find(|s| s.id == id).map(|s| s.kind)
    }

    /// Lwcs from a nested Stn into its own parent are drawn inside the parent.
    fn is_internal(&self, src: &str, sink: &str) -> bool {
        self.parent.get(src) == Some(&sink)
    }

    /// Top-level edges, without Timing outputs and optionally without Instance outputs.
    fn edges(&self, skip_instances: bool) -> BTreeSet<(&'a str, &'a str)> {
        let mut out = BTreeSet::new();
        let kinds: BTreeMap<&str, StnKind> = self.doc.stns.iter().map(|s| (s.id.as_str(), s.kind)).collect();
        for l in &self.doc.lwcs {
            let Some(&u) = self.top.get(l.source.stn.as_str()) else { continue };
            match kinds.get(u) {
                Some(StnKind::Timing) => continue,
                Some(StnKind::Instance) if skip_instances => continue,
                _ => {}
            }
            for s in &l.sinks {
                if let Some(&v) = self.top.get(s.stn.as_str()) {
                    if u != v {
                        out.insert((u, v));
                    }
                }
            }
        }
        out
    }
}

/// Longest-path layers over `edges`; `None` if they contain a cycle.
fn longest_path<'a>(nodes: &[&'a str], edges: &BTreeSet<(&'a str, &'a str)>) -> Option<BTreeMap<&'a str, u32>> {
    let mut indeg: BTreeMap<&str, usize> = nodes.iter().map(|n| (*n, 0)).collect();
    let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (u, v) in edges {
        *indeg.get_mut(v)? += 1;
        succ.entry(u).or_default().push(v);
    }
    let mut layer: BTreeMap<&str, u32> = nodes.iter().map(|n| (*n, 0)).collect();
    let mut ready: Vec<&str> = nodes.iter().copied().filter(|n| indeg[n] == 0).collect();
    let mut seen = 0;
    while let Some(u) = ready.pop() {
        seen += 1;
        for v in succ.get(u).map(Vec::as_slice).unwrap_or(&[]) {
            let next = layer[u] + 1;
            let lv = layer.get_mut(v)?;
            *lv = (*lv).max(next);
            let d = indeg.get_mut(v)?;
            *d -= 1;
            if *d == 0 {
                ready.push(v);
            }
        }
    }
    (seen == nodes.len()).then_some(layer)
}

/// Layer of every Stn (nested Stns share their top-level ancestor's layer).
///
/// Layers are longest paths from the inputs over combinational edges;
/// register outputs are feedback and exempt. A Constant moves right to just
/// before its nearest reader, and output ports share the last layer.
pub fn assign_layers(doc: &CcrsDocument) -> BTreeMap<String, u32> {
    let g = Graph::new(doc);
    let nodes: Vec<&str> = doc.stns.iter().map(|s| s.id.as_str()).collect();
    let mut edges = g.edges(false);
    let mut layer = longest_path(&nodes, &edges);
    if layer.is_none() {
        // A loop through an instance is broken by a register inside it.
        edges = g.edges(true);
        layer = longest_path(&nodes, &edges);
    }
    let mut layer = layer.unwrap_or_else(|| nodes.iter().map(|n| (*n, 0)).collect());
    for s in &doc.stns {
        if s.kind == StnKind::Constant {
            let readers = edges.iter().filter(|(u, _)| *u == s.id).map(|(_, v)| layer[v]);
            if let Some(min) = readers.min() {
                layer.insert(s.id.as_str(), min.saturating_sub(1));
            }
        }
    }
    let last = layer.values().copied().max().unwrap_or(0);
    for s in &doc.stns {
        if s.kind == StnKind::Port && s.outputs.is_empty() {
            layer.insert(s.id.as_str(), last);
        }
    }
    g.top.iter().map(|(id, t)| (id.to_string(), layer[t])).collect()
}

/// One position in a layer: a real Stn or a dummy holding a wire that
/// passes through the layer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    Stn(String),
    Dummy { lwc: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ordering {
    pub layers: BTreeMap<String, u32>,
    /// Top to bottom, per layer.
    pub rows: Vec<Vec<Slot>>,
}

impl Ordering {
    /// Real Stn ids per layer, dummies dropped.
    pub fn stn_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .filter_map(|s| match s {
                        Slot::Stn(id) => Some(id.clone()),
                        Slot::Dummy { .. } => None,
                    })
                    .collect()
            })
            .collect()
    }
}

/// How one Lwc is routed between layer columns.
#[derive(Debug, Clone)]
struct NetPlan {
    lwc: String,
    /// Layer of the source.
    from: usize,
    /// Farthest forward sink layer, if any sink is to the right.
    reach: Option<usize>,
    /// Layers of sinks at or left of the source.
    back: BTreeSet<usize>,
}

fn net_plans(doc: &CcrsDocument, g: &Graph, layers: &BTreeMap<String, u32>) -> Vec<NetPlan> {
    let key = |l: &crate::ir::Lwc| (g.rank.get(g.top[l.source.stn.as_str()]).copied().unwrap_or(usize::MAX), l.source.pin, l.id.clone());
    let mut lwcs: Vec<&crate::ir::Lwc> = doc.lwcs.iter().filter(|l| g.top.contains_key(l.source.stn.as_str())).collect();
    lwcs.sort_by_key(|l| key(l));
    let mut plans = Vec::new();
    for l in lwcs {
        let from = layers[&l.source.stn] as usize;
        let mut reach = None;
        let mut back = BTreeSet::new();
        for s in &l.sinks {
            if g.is_internal(&l.source.stn, &s.stn) || !layers.contains_key(&s.stn) {
                continue;
            }
            let b = layers[&s.stn] as usize;
            if b > from {
                reach = Some(reach.map_or(b, |r: usize| r.max(b)));
            } else {
                back.insert(b);
            }
        }
        if reach.is_some() || !back.is_empty() {
            plans.push(NetPlan { lwc: l.id.clone(), from, reach, back });
        }
    }
    plans
}

fn crossings(rows: &[Vec<usize>], edges: &[(usize, usize)], layer_of: &[usize]) -> usize {
    let mut pos = vec![0usize; layer_of.len()];
    for r in rows {
        for (i, n) in r.iter().enumerate() {
            pos[*n] = i;
        }
    }
    let mut total = 0;
    for l in 0..rows.len().saturating_sub(1) {
        let es: Vec<(usize, usize)> = edges.iter().filter(|(u, _)| layer_of[*u] == l).map(|(u, v)| (pos[*u], pos[*v])).collect();
        for i in 0..es.len() {
            for j in i + 1..es.len() {
                let (a, b) = (es[i], es[j]);
                if (a.0 < b.0 && a.1 > b.1) || (a.0 > b.0 && a.1 < b.1) {
                    total += 1;
                }
            }
        }
    }
    total
}

/// Order each layer with 4 down-up barycenter sweeps, keeping the logic of
/// each clock domain together when there are several. Ties go to the lower
/// rank (declared port order, then canonical order). The result never has
/// more crossings than the initial rank order.
pub fn order_layers(doc: &CcrsDocument, layers: &BTreeMap<String, u32>) -> Ordering {
    let g = Graph::new(doc);
    let n_layers = doc.stns.iter().map(|s| layers[&s.id] as usize + 1).max().unwrap_or(0);

    let mut slots: Vec<Slot> = Vec::new();
    let mut layer_of: Vec<usize> = Vec::new();
    let mut rank: Vec<(usize, usize)> = Vec::new();
    let mut index: BTreeMap<Slot, usize> = BTreeMap::new();
    for s in &doc.stns {
        let slot = Slot::Stn(s.id.clone());
        index.insert(slot.clone(), slots.len());
        slots.push(slot);
        layer_of.push(layers[&s.id] as usize);
        rank.push((g.rank.get(s.id.as_str()).copied().unwrap_or(usize::MAX), 0));
    }
    // Dummies live per (net, layer); one chain per net, shared by its sinks.
    let mut dummy: BTreeMap<(String, usize), usize> = BTreeMap::new();
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (k, p) in net_plans(doc, &g, layers).iter().enumerate() {
        let Some(reach) = p.reach else { continue };
        let l = doc.lwcs.iter().find(|l| l.id == p.lwc).expect("planned lwc");
        let src = index[&Slot::Stn(g.top[l.source.stn.as_str()].to_string())];
        let src_rank = rank[src].0;
        let mut prev = src;
        for layer in p.from + 1..reach {
            let slot = Slot::Dummy { lwc: p.lwc.clone() };
            let id = slots.len();
            slots.push(slot);
            layer_of.push(layer);
            rank.push((src_rank, k + 1));
            dummy.insert((p.lwc.clone(), layer), id);
            edges.insert((prev, id));
            prev = id;
        }
        for s in &l.sinks {
            let Some(&t) = g.top.get(s.stn.as_str()) else { continue };
            let b = layers[t] as usize;
            if b <= p.from || g.is_internal(&l.source.stn, &s.stn) {
                continue;
            }
            let from = if b == p.from + 1 { src } else { dummy[&(p.lwc.clone(), b - 1)] };
            edges.insert((from, index[&Slot::Stn(t.to_string())]));
        }
    }
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();

    let owners = domain_owners(doc);
    let group: Vec<usize> = slots.iter().map(|s| slot_group(doc, &owners, s)).collect();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n_layers];
    for (i, l) in layer_of.iter().enumerate() {
        rows[*l].push(i);
    }
    for r in &mut rows {
        r.sort_by_key(|n| (group[*n], rank[*n]));
    }
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); slots.len()];
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); slots.len()];
    for (u, v) in &edges {
        succs[*u].push(*v);
        preds[*v].push(*u);
    }

    let mut best = rows.clone();
    let mut best_c = crossings(&rows, &edges, &layer_of);
    let mut pos = vec![0i64; slots.len()];
    let reorder = |rows: &mut Vec<Vec<usize>>, l: usize, nbrs: &[Vec<usize>], pos: &mut Vec<i64>| {
        for r in rows.iter() {
            for (i, n) in r.iter().enumerate() {
                pos[*n] = i as i64;
            }
        }
        // Barycenter as an exact fraction; nodes without neighbours keep their place.
        let bary = |n: usize| -> (i64, i64) {
            if nbrs[n].is_empty() {
                (pos[n], 1)
            } else {
                (nbrs[n].iter().map(|m| pos[*m]).sum(), nbrs[n].len() as i64)
            }
        };
        rows[l].sort_by(|a, b| {
            let ((sa, ca), (sb, cb)) = (bary(*a), bary(*b));
            group[*a].cmp(&group[*b]).then((sa * cb).cmp(&(sb * ca))).then(rank[*a].cmp(&rank[*b]))
        });
    };
    for _ in 0..4 {
        for l in 1..n_layers {
            reorder(&mut rows, l, &preds, &mut pos);
        }
        for l in (0..n_layers.saturating_sub(1)).rev() {
            reorder(&mut rows, l, &succs, &mut pos);
        }
        let c = crossings(&rows, &edges, &layer_of);
        if c < best_c {
            best_c = c;
            best = rows.clone();
        }
    }
    Ordering { layers: layers.clone(), rows: best.into_iter().map(|r| r.into_iter().map(|n| slots[n].clone()).collect()).collect() }
}

/// Boxes and anchors, plus the routing plan that fixed the channel widths.
#[derive(Debug, Clone)]
pub struct Placement {
    pub geometry: Geometry,
    plans: Vec<NetPlan>,
    /// (lwc, layer) to the y of its wire through that layer.
    dummy_y: BTreeMap<(String, usize), i64>,
    /// (lwc, channel, is_return) to trunk x. Channel c lies right of layer c; -1 is left of layer 0.
    trunk_x: BTreeMap<(String, i64, bool), i64>,
    bypass_y: BTreeMap<String, i64>,
}

fn place_box(s: &Stn, x: i64, y: i64, geo: &mut Geometry) {
    let (w, h) = box_size(s);
    geo.boxes.insert(s.id.clone(), Rect::new(x, y, w, h));
    let hh = header_height(s);
    let pins = |n: usize, x: i64| -> Vec<Point> {
        let off = (hh - n as i64 * PORT_PITCH) / 2;
        (0..n as i64).map(|i| (x, y + off + PORT_PITCH / 2 + PORT_PITCH * i)).collect()
    };
    geo.anchors.insert(s.id.clone(), StnAnchors { inputs: pins(s.inputs.len(), x), outputs: pins(s.outputs.len(), x + w) });
    let mut cy = y + hh + PAD;
    for c in &s.children {
        place_box(c, x + LEFT_LANE, cy, geo);
        cy += box_size(c).1 + PAD;
    }
}

/// Size every box, stack each layer top to bottom and space the layer
/// columns so that each channel fits its trunks.
pub fn size_and_place(doc: &CcrsDocument, ordering: &Ordering) -> Placement {
    let g = Graph::new(doc);
    let plans = net_plans(doc, &g, &ordering.layers);
    let n_layers = ordering.rows.len();
    let stns: BTreeMap<&str, &Stn> = doc.stns.iter().map(|s| (s.id.as_str(), s)).collect();

    let mut tracks: BTreeMap<i64, Vec<(String, bool)>> = BTreeMap::new();
    for p in &plans {
        for c in p.from..p.reach.unwrap_or(p.from + 1) {
            tracks.entry(c as i64).or_default().push((p.lwc.clone(), false));
        }
        for b in &p.back {
            tracks.entry(*b as i64 - 1).or_default().push((p.lwc.clone(), true));
        }
    }
    let count = |c: i64| tracks.get(&c).map_or(0, Vec::len) as i64;
    let gap = |c: i64| {
        if c < 0 && count(c) == 0 {
            0
        } else {
            LAYER_GAP.max(TRACK_SPACING * (count(c) + 2))
        }
    };

    let mut col_x = Vec::with_capacity(n_layers);
    let mut chan_start: BTreeMap<i64, i64> = BTreeMap::new();
    chan_start.insert(-1, MARGIN);
    let mut x = MARGIN + gap(-1);
    for (l, row) in ordering.rows.iter().enumerate() {
        col_x.push(x);
        let w = row
            .iter()
            .filter_map(|s| match s {
                Slot::Stn(id) => Some(box_size(stns[id.as_str()]).0),
                Slot::Dummy { .. } => None,
            })
            .max()
            .unwrap_or(0);
        chan_start.insert(l as i64, x + w);
        x += w + gap(l as i64);
    }
    let mut trunk_x = BTreeMap::new();
    for (c, list) in &tracks {
        for (k, (lwc, ret)) in list.iter().enumerate() {
            trunk_x.insert((lwc.clone(), *c, *ret), chan_start[c] + TRACK_SPACING * (k as i64 + 1));
        }
    }

    let backs: Vec<&NetPlan> = plans.iter().filter(|p| !p.back.is_empty()).collect();
    let bypass_y: BTreeMap<String, i64> =
        backs.iter().enumerate().map(|(k, p)| (p.lwc.clone(), MARGIN + TRACK_SPACING * k as i64)).collect();
    let top = MARGIN + if backs.is_empty() { 0 } else { TRACK_SPACING * (backs.len() as i64 + 1) };

    let slot_h = |s: &Slot| match s {
        Slot::Stn(id) => box_size(stns[id.as_str()]).1,
        Slot::Dummy { .. } => PORT_PITCH,
    };
    // Each band is as tall as its tallest layer; layers are centred in it.
    let owners = domain_owners(doc);
    let groups: Vec<Vec<usize>> =
        ordering.rows.iter().map(|r| r.iter().map(|s| slot_group(doc, &owners, s)).collect()).collect();
    let n_groups = groups.iter().flatten().max().map_or(0, |g| g + 1);
    let band_height = |l: usize, g: usize| -> i64 {
        let hs: Vec<i64> = ordering.rows[l].iter().zip(&groups[l]).filter(|(_, k)| **k == g).map(|(s, _)| slot_h(s)).collect();
        hs.iter().sum::<i64>() + STACK_GAP * (hs.len() as i64 - 1).max(0)
    };
    let mut band_top = Vec::with_capacity(n_groups);
    let mut band_h = Vec::with_capacity(n_groups);
    let mut y = top;
    for g in 0..n_groups {
        let h = (0..n_layers).map(|l| band_height(l, g)).max().unwrap_or(0);
        band_top.push(y);
        band_h.push(h);
        if h > 0 {
            y += h + STACK_GAP;
        }
    }

    let mut geo = Geometry::default();
    let mut dummy_y = BTreeMap::new();
    for (l, row) in ordering.rows.iter().enumerate() {
        let mut cursor: Vec<Option<i64>> = vec![None; n_groups];
        for (s, &g) in row.iter().zip(&groups[l]) {
            let y = *cursor[g].get_or_insert(band_top[g] + (band_h[g] - band_height(l, g)) / 2);
            match s {
                Slot::Stn(id) => place_box(stns[id.as_str()], col_x[l], y, &mut geo),
                Slot::Dummy { lwc } => {
                    dummy_y.insert((lwc.clone(), l), y + PORT_PITCH / 2);
                }
            }
            cursor[g] = Some(y + slot_h(s) + STACK_GAP);
        }
    }
    let right = geo.boxes.values().map(Rect::right).chain(trunk_x.values().copied()).max().unwrap_or(0);
    let bottom = geo.boxes.values().map(Rect::bottom).max().unwrap_or(0);
    geo.width = right.max(MARGIN) + MARGIN;
    geo.height = bottom.max(top) + MARGIN;
    geo.layers = ordering.layers.clone();
    Placement { geometry: geo, plans, dummy_y, trunk_x, bypass_y }
}

/// Drop repeated points and interior points on a straight run.
fn simplify(points: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        if out.last() == Some(&p) {
            continue;
        }
        if out.len() >= 2 {
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            if (a.0 == b.0 && b.0 == p.0) || (a.1 == b.1 && b.1 == p.1) {
                out.pop();
            }
        }
        out.push(p);
    }
    out
}

/// One orthogonal polyline per sink, from the source anchor to the sink
/// anchor. Sinks of one net share the trunk in each channel they cross.
pub fn route_lwc(doc: &CcrsDocument, placement: &Placement) -> BTreeMap<String, Vec<Vec<Point>>> {
    let g = Graph::new(doc);
    let geo = &placement.geometry;
    let plans: BTreeMap<&str, &NetPlan> = placement.plans.iter().map(|p| (p.lwc.as_str(), p)).collect();
    let stn_map = doc.stn_map();
    let mut routes = BTreeMap::new();
    for l in &doc.lwcs {
        let Some(src) = geo.anchors.get(&l.source.stn).and_then(|a| a.outputs.get(l.source.pin)).copied() else { continue };
        let mut polylines = Vec::new();
        for s in &l.sinks {
            let Some(dst) = geo.anchors.get(&s.stn).and_then(|a| a.inputs.get(s.pin)).copied() else { continue };
            let pts = if g.is_internal(&l.source.stn, &s.stn) {
                // Right of every sibling inside the parent, then up or down to the pin band.
                let parent = stn_map[s.stn.as_str()];
                let pbox = geo.boxes[&parent.id];
                let inner_w = parent.children.iter().filter_map(|c| geo.boxes.get(&c.id)).map(|r| r.w).max().unwrap_or(0);
                let k = parent.children.iter().position(|c| c.id == l.source.stn).unwrap_or(0) as i64;
                let xr = pbox.x + LEFT_LANE + inner_w + TRACK_SPACING * (k + 1);
                vec![src, (xr, src.1), (xr, dst.1), dst]
            } else {
                let Some(p) = plans.get(l.id.as_str()) else { continue };
                let from = p.from;
                let b = geo.layers[&s.stn] as usize;
                let trunk = |c: i64, ret: bool| placement.trunk_x[&(l.id.clone(), c, ret)];
                let mut pts = vec![src, (trunk(from as i64, false), src.1)];
                if b > from {
                    for layer in from + 1..b {
                        let y = placement.dummy_y[&(l.id.clone(), layer)];
                        pts.push((trunk(layer as i64 - 1, false), y));
                        pts.push((trunk(layer as i64, false), y));
                    }
                    pts.push((trunk(b as i64 - 1, false), dst.1));
                } else {
                    let y = placement.bypass_y[&l.id];
                    let xr = trunk(b as i64 - 1, true);
                    pts.push((trunk(from as i64, false), y));
                    pts.push((xr, y));
                    pts.push((xr, dst.1));
                }
                pts.push(dst);
                pts
            };
            polylines.push(simplify(pts));
        }
        routes.insert(l.id.clone(), polylines);
    }
    routes
}

/// Top-level non-port Stns that reach or are reached from the registers of
/// exactly one clock domain, mapped to that domain's index.
fn domain_owners(doc: &CcrsDocument) -> BTreeMap<String, usize> {
    let g = Graph::new(doc);
    let is_port = |id: &str| g.kind(id) == Some(StnKind::Port);
    let mut succ: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut pred: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for l in &doc.lwcs {
        let Some(&u) = g.top.get(l.source.stn.as_str()) else { continue };
        for s in &l.sinks {
            let Some(&v) = g.top.get(s.stn.as_str()) else { continue };
            if u != v && !is_port(u) && !is_port(v) {
                succ.entry(u).or_default().insert(v);
                pred.entry(v).or_default().insert(u);
            }
        }
    }
    let reach = |start: &[&str], next: &BTreeMap<&str, BTreeSet<&str>>| -> BTreeSet<String> {
        let mut seen: BTreeSet<String> = start.iter().map(|s| s.to_string()).collect();
        let mut stack: Vec<String> = seen.iter().cloned().collect();
        while let Some(n) = stack.pop() {
            for m in next.get(n.as_str()).into_iter().flatten() {
                if seen.insert(m.to_string()) {
                    stack.push(m.to_string());
                }
            }
        }
        seen
    };
    let cones: Vec<BTreeSet<String>> = doc
        .clock_domains
        .iter()
        .map(|d| {
            let regs: Vec<&str> = doc
                .stns
                .iter()
                .filter(|s| s.kind == StnKind::Timing && s.attr_str("domain") == Some(d.id.as_str()))
                .map(|s| s.id.as_str())
                .collect();
            let mut cone = reach(&regs, &succ);
            cone.extend(reach(&regs, &pred));
            cone
        })
        .collect();
    let mut owners = BTreeMap::new();
    for (i, cone) in cones.iter().enumerate() {
        for s in cone {
            if cones.iter().enumerate().all(|(j, c)| j == i || !c.contains(s)) {
                owners.insert(s.clone(), i);
            }
        }
    }
    owners
}

/// Band of a slot when several clock domains share a drawing: 0 for shared
/// logic and ports, 1 + domain index otherwise. Always 0 with fewer than two domains.
fn slot_group(doc: &CcrsDocument, owners: &BTreeMap<String, usize>, slot: &Slot) -> usize {
    if doc.clock_domains.len() < 2 {
        return 0;
    }
    let id = match slot {
        Slot::Stn(id) => id.as_str(),
        Slot::Dummy { lwc } => match doc.lwcs.iter().find(|l| &l.id == lwc) {
            Some(l) => l.source.stn.as_str(),
            None => return 0,
        },
    };
    let top = doc.stns.iter().find(|t| {
        let mut found = false;
        t.walk(&mut |s, _| found |= s.id == id);
        found
    });
    top.and_then(|t| owners.get(&t.id)).map_or(0, |d| d + 1)
}

/// Region per clock domain: the bounding box, plus margin, of the non-port
/// Stns that reach or are reached from that domain's registers and from no
/// other domain's. Domains with no such Stn get no region.
pub fn partition_clock_domains(doc: &CcrsDocument, geometry: &Geometry) -> BTreeMap<String, Rect> {
    let owners = domain_owners(doc);
    let mut regions = BTreeMap::new();
    for (i, d) in doc.clock_domains.iter().enumerate() {
        let own = owners.iter().filter(|(_, o)| **o == i).filter_map(|(s, _)| geometry.boxes.get(s));
        if let Some(r) = own.copied().reduce(|a, b| a.union(&b)) {
            regions.insert(d.id.clone(), r.inflate(REGION_MARGIN));
        }
    }
    regions
}

/// Full layout of one module.
pub fn layout(doc: &CcrsDocument) -> Geometry {
    let layers = assign_layers(doc);
    let ordering = order_layers(doc, &layers);
    let placement = size_and_place(doc, &ordering);
    let routes = route_lwc(doc, &placement);
    let mut geo = placement.geometry;
    geo.routes = routes;
    geo.regions = partition_clock_domains(doc, &geo);
    geo
}

/// Problems with a geometry: overlapping top-level boxes, children not
/// strictly inside parents, anchors off their edges, routes that miss their
/// anchors, bend diagonally or pass through an unrelated box, and
/// combinational wires that run right to left. Empty when all invariants hold.
pub fn check_geometry(doc: &CcrsDocument, geo: &Geometry) -> Vec<String> {
    let mut errs = Vec::new();
    let g = Graph::new(doc);
    let all = doc.all_stns();
    for (s, parent) in &all {
        let Some(b) = geo.boxes.get(&s.id) else {
            errs.push(format!("{}: no box", s.id));
            continue;
        };
        if b.w < MIN_BOX_W.max(label_extent(&s.label)) || b.h < s.inputs.len().max(s.outputs.len()) as i64 * PORT_PITCH {
            errs.push(format!("{}: box too small", s.id));
        }
        if let Some(p) = parent {
            if !geo.boxes.get(&p.id).is_some_and(|pb| pb.strictly_contains(b)) {
                errs.push(format!("{}: not strictly inside {}", s.id, p.id));
            }
        }
        match geo.anchors.get(&s.id) {
            Some(a) => {
                let ok_in = a.inputs.len() == s.inputs.len() && a.inputs.iter().all(|p| p.0 == b.x && b.y <= p.1 && p.1 <= b.bottom());
                let ok_out =
                    a.outputs.len() == s.outputs.len() && a.outputs.iter().all(|p| p.0 == b.right() && b.y <= p.1 && p.1 <= b.bottom());
                if !ok_in || !ok_out {
                    errs.push(format!("{}: anchors off the box edges", s.id));
                }
            }
            None => errs.push(format!("{}: no anchors", s.id)),
        }
    }
    for (i, a) in doc.stns.iter().enumerate() {
        for b in &doc.stns[i + 1..] {
            if let (Some(ra), Some(rb)) = (geo.boxes.get(&a.id), geo.boxes.get(&b.id)) {
                if ra.overlaps(rb) {
                    errs.push(format!("{} overlaps {}", a.id, b.id));
                }
            }
        }
    }
    let ancestors = |id: &str| -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut cur = id;
        while let Some(p) = g.parent.get(cur) {
            out.insert(p.to_string());
            cur = p;
        }
        out
    };
    for l in &doc.lwcs {
        let Some(polys) = geo.routes.get(&l.id) else {
            errs.push(format!("{}: no route", l.id));
            continue;
        };
        if polys.len() != l.sinks.len() {
            errs.push(format!("{}: {} polylines for {} sinks", l.id, polys.len(), l.sinks.len()));
            continue;
        }
        let src = geo.anchors.get(&l.source.stn).and_then(|a| a.outputs.get(l.source.pin)).copied();
        for (s, poly) in l.sinks.iter().zip(polys) {
            let dst = geo.anchors.get(&s.stn).and_then(|a| a.inputs.get(s.pin)).copied();
            if poly.first().copied() != src || poly.last().copied() != dst {
                errs.push(format!("{}: route does not join its anchors", l.id));
            }
            let mut allowed = ancestors(&l.source.stn);
            allowed.extend(ancestors(&s.stn));
            for w in poly.windows(2) {
                if w[0].0 != w[1].0 && w[0].1 != w[1].1 {
                    errs.push(format!("{}: diagonal segment", l.id));
                }
                for (id, r) in &geo.boxes {
                    if !allowed.contains(id) && r.segment_enters(w[0], w[1]) {
                        errs.push(format!("{}: passes through {id}", l.id));
                    }
                }
            }
            let (Some(&u), Some(&v)) = (g.top.get(l.source.stn.as_str()), g.top.get(s.stn.as_str())) else { continue };
            let comb = g.kind(u) != Some(StnKind::Timing) && u != v;
            if comb && geo.layers.get(u) < geo.layers.get(v) {
                if let (Some(a), Some(b)) = (geo.boxes.get(u), geo.boxes.get(v)) {
                    if a.right() >= b.x {
                        errs.push(format!("{}: combinational wire runs right to left", l.id));
                    }
                }
            } else if comb && g.kind(u) != Some(StnKind::Instance) {
                errs.push(format!("{}: combinational wire is not layered forward", l.id));
            }
        }
    }
    errs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::{elaborate, parse_source};
    use crate::templater::lower_module;

    fn lower(src: &str) -> CcrsDocument {
        let design = elaborate(&parse_source(src).unwrap()).unwrap();
        let name = design.modules.last().unwrap().name.clone();
        lower_module(&design, &name).unwrap()
    }

    fn segments(p: &[Point]) -> usize {
        p.len() - 1
    }

    #[test]
    fn chain_occupies_three_layers() {
        let doc = lower("module m(input a, output y); assign y = ~a; endmodule");
        let layers = assign_layers(&doc);
        let op = doc.stns.iter().find(|s| s.kind == StnKind::DataOp).unwrap();
        assert_eq!(layers["port.a"], 0);
        assert_eq!(layers[&op.id], 1);
        assert_eq!(layers["port.y"], 2);
    }

    /// Longest path by enumerating every path from each node.
    fn brute_longest(doc: &CcrsDocument) -> u32 {
        fn depth(doc: &CcrsDocument, id: &str) -> u32 {
            doc.lwcs
                .iter()
                .filter(|l| l.source.stn == id)
                .flat_map(|l| l.sinks.iter())
                .map(|s| 1 + depth(doc, &s.stn))
                .max()
                .unwrap_or(0)
        }
        doc.stns.iter().map(|s| depth(doc, &s.id)).max().unwrap()
    }

    #[test]
    fn full_adder_depth_matches_longest_path() {
        let doc = lower(crate::corpus::get("full_adder").unwrap().source);
        let layers = assign_layers(&doc);
        assert_eq!(*layers.values().max().unwrap(), brute_longest(&doc));
        for l in &doc.lwcs {
            for s in &l.sinks {
                assert!(layers[&l.source.stn] < layers[&s.stn]);
            }
        }
    }

    #[test]
    fn register_feedback_does_not_stretch_layers() {
        let doc = lower(crate::corpus::get("counter2").unwrap().source);
        let layers = assign_layers(&doc);
        assert!(*layers.values().max().unwrap() < doc.stns.len() as u32);
        let geo = layout(&doc);
        assert_eq!(check_geometry(&doc, &geo), Vec::<String>::new());
        // The wire back into the register runs above every box.
        let top = geo.boxes.values().map(|b| b.y).min().unwrap();
        assert!(geo.routes.values().flatten().flatten().any(|p| p.1 < top));
    }

    /// Crossings between adjacent layers, with long wires drawn through
    /// their dummy slots and each shared segment counted once.
    fn crossing_count(doc: &CcrsDocument, layers: &BTreeMap<String, u32>, rows: &[Vec<Slot>]) -> usize {
        let mut top: BTreeMap<String, String> = BTreeMap::new();
        for t in &doc.stns {
            t.walk(&mut |s, _| {
                top.insert(s.id.clone(), t.id.clone());
            });
        }
        let pos: BTreeMap<&Slot, usize> = rows.iter().flat_map(|r| r.iter().enumerate().map(|(i, s)| (s, i))).collect();
        let mut edges: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
        for l in &doc.lwcs {
            let u = Slot::Stn(top[&l.source.stn].clone());
            let a = layers[&l.source.stn] as usize;
            for s in &l.sinks {
                let b = layers[&s.stn] as usize;
                if b <= a || top[&s.stn] == top[&l.source.stn] {
                    continue;
                }
                let mut path = vec![pos[&u]];
                path.extend((a + 1..b).map(|_| pos[&Slot::Dummy { lwc: l.id.clone() }]));
                path.push(pos[&Slot::Stn(top[&s.stn].clone())]);
                for (k, w) in path.windows(2).enumerate() {
                    edges.insert((a + k, w[0], w[1]));
                }
            }
        }
        let edges: Vec<_> = edges.into_iter().collect();
        let mut n = 0;
        for (i, (la, a, b)) in edges.iter().enumerate() {
            for (lc, c, d) in &edges[i + 1..] {
                if la == lc && (*a as i64 - *c as i64) * (*b as i64 - *d as i64) < 0 {
                    n += 1;
                }
            }
        }
        n
    }

    fn permutations<T: Clone>(v: &[T]) -> Vec<Vec<T>> {
        if v.len() <= 1 {
            return vec![v.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..v.len() {
            let mut rest = v.to_vec();
            let x = rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, x.clone());
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn complete_bipartite_ordering_is_optimal() {
        let doc = lower("module m(input a, input b, output x, output y); assign x = a & b; assign y = a | b; endmodule");
        let layers = assign_layers(&doc);
        let got = order_layers(&doc, &layers).rows;
        let mut best = usize::MAX;
        for p0 in permutations(&got[0]) {
            for p1 in permutations(&got[1]) {
                for p2 in permutations(&got[2]) {
                    best = best.min(crossing_count(&doc, &layers, &[p0.clone(), p1.clone(), p2.clone()]));
                }
            }
        }
        assert_eq!(crossing_count(&doc, &layers, &got), best);
        assert!(best <= 1);
    }

    #[test]
    fn ordering_never_adds_crossings() {
        for d in crate::corpus::DESIGNS {
            let doc = lower(d.source);
            let layers = assign_layers(&doc);
            let got = order_layers(&doc, &layers);
            let g = Graph::new(&doc);
            let src_rank = |lwc: &str| {
                let l = doc.lwcs.iter().find(|l| l.id == lwc).unwrap();
                (g.rank[g.top[l.source.stn.as_str()]], 1 + l.source.pin)
            };
            let mut initial = got.rows.clone();
            for r in &mut initial {
                r.sort_by_key(|s| match s {
                    Slot::Stn(id) => (g.rank[id.as_str()], 0),
                    Slot::Dummy { lwc } => src_rank(lwc),
                });
            }
            if doc.clock_domains.len() < 2 {
                assert!(crossing_count(&doc, &layers, &got.rows) <= crossing_count(&doc, &layers, &initial), "{}", d.name);
            }
        }
    }

    #[test]
    fn single_layer_keeps_rank_order() {
        let doc = lower("module m(input a, input b, output x); assign x = a; endmodule");
        let rows = order_layers(&doc, &assign_layers(&doc)).stn_rows();
        assert_eq!(rows[0], vec!["port.a", "port.b"]);
    }

    #[test]
    fn box_sizes_respect_minimums_and_pins() {
        let mut s = Stn::new("s", StnKind::DataOp, "与");
        assert_eq!(box_size(&s), (MIN_BOX_W, MIN_BOX_H));
        s.inputs = (0..5).map(|i| crate::ir::Pin::new(format!("in{i}"), 1)).collect();
        assert_eq!(box_size(&s).1, 80);
        s.label = "四十八个单位宽以上的长标签".into();
        assert_eq!(box_size(&s).0, 13 * 16 + 16);
    }

    #[test]
    fn nested_children_sit_strictly_inside() {
        let doc = lower(
            "module m(input a, input b, input c, output reg y);
             always @(*) begin if (a) begin if (b) y = c; else y = ~c; end else y = b; end
             endmodule",
        );
        assert!(doc.stns.iter().any(|s| !s.children.is_empty()));
        let geo = layout(&doc);
        assert_eq!(check_geometry(&doc, &geo), Vec::<String>::new());
        for (s, p) in doc.all_stns() {
            if let Some(p) = p {
                assert!(geo.boxes[&p.id].strictly_contains(&geo.boxes[&s.id]));
            }
        }
    }

    #[test]
    fn adjacent_single_sink_wire_is_a_z() {
        let doc = lower("module m(input a, input b, output y); assign y = a & b; endmodule");
        let geo = layout(&doc);
        let polys: Vec<&Vec<Point>> = geo.routes.values().flatten().collect();
        assert!(polys.iter().all(|p| segments(p) <= 3 && p.len() >= 2));
        assert!(polys.iter().any(|p| segments(p) == 3));
    }

    #[test]
    fn fanout_shares_one_trunk() {
        let doc = lower(
            "module m(input a, input b, output x, output y, output z);
             assign x = a & b; assign y = a | b; assign z = a ^ b; endmodule",
        );
        let geo = layout(&doc);
        let a = doc.lwcs.iter().find(|l| l.source.stn == "port.a").unwrap();
        let polys = &geo.routes[&a.id];
        assert_eq!(polys.len(), 3);
        let trunk_x: BTreeSet<i64> = polys.iter().map(|p| p[1].0).collect();
        assert_eq!(trunk_x.len(), 1);
        assert_eq!(check_geometry(&doc, &geo), Vec::<String>::new());
    }

    #[test]
    fn regions_follow_clock_domains() {
        let comb = lower(crate::corpus::get("mux2").unwrap().source);
        assert!(layout(&comb).regions.is_empty());
        let one = lower(crate::corpus::get("counter4").unwrap().source);
        let geo = layout(&one);
        assert_eq!(geo.regions.len(), 1);
        let r = geo.regions.values().next().unwrap();
        for s in one.stns.iter().filter(|s| s.kind == StnKind::Timing) {
            assert!(r.strictly_contains(&geo.boxes[&s.id]));
        }
    }

    #[test]
    fn empty_module_has_a_blank_canvas() {
        let doc = CcrsDocument::new("empty");
        let geo = layout(&doc);
        assert_eq!((geo.width, geo.height), (2 * MARGIN, 2 * MARGIN));
        assert!(geo.boxes.is_empty());
    }
}
