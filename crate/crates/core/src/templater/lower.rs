//! Lowering of elaborated modules to chart documents.
//!
//! Statements are executed symbolically: every net or process variable maps
//! to a [`Src`], either a named net resolved at the end or a concrete Stn
//! output pin. Conditional assignments become Branch or CaseSelect Stns whose
//! default row carries the value the target held before the statement.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use super::symbols;
use crate::diag::{Code, Diagnostic, Span};
use crate::hdl::ast::{BinaryOp, Direction, Expr, ExprKind, Stmt, StmtKind};
use crate::hdl::elab::{case_is_full, literal_value, ElabModule, ElaboratedDesign, ProcessKind};
use crate::ir::{CcrsDocument, ClockDomain, DocPort, Endpoint, Lwc, Pin, PortDirection, Row, Stn, StnKind};
use crate::ops::{mask, Opcode};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Src {
    Net(String),
    Pin(usize, usize),
}

type Env = BTreeMap<String, Src>;

/// Lower `name` and every module below it. Submodule documents are stored in
/// the result's metadata.
pub fn lower_module(design: &ElaboratedDesign, name: &str) -> Result<CcrsDocument, Vec<Diagnostic>> {
    let Some(top) = design.module(name) else {
        return Err(vec![Diagnostic::error(Code::UnknownModule, format!("unknown module {name}"))]);
    };
    let mut doc = lower_single(top)?;
    let mut errors = Vec::new();
    let mut subs = Vec::new();
    for m in design.hierarchy(name) {
        if m.name != name {
            match lower_single(m) {
                Ok(d) => subs.push(d),
                Err(mut e) => errors.append(&mut e),
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    subs.sort_by(|a, b| a.module.cmp(&b.module));
    doc.metadata.submodules = subs;
    Ok(doc)
}

/// Lower one module without its submodules.
pub fn lower_single(m: &ElabModule) -> Result<CcrsDocument, Vec<Diagnostic>> {
    let mut lw = Lowerer { m, stns: Vec::new(), spans: Vec::new(), conns: Vec::new(), net_src: BTreeMap::new(), errors: Vec::new(), counter: 0 };
    lw.run();
    if !lw.errors.is_empty() {
        return Err(lw.errors);
    }
    Ok(lw.finish())
}

struct Lowerer<'a> {
    m: &'a ElabModule,
    stns: Vec<Stn>,
    spans: Vec<Span>,
    /// Source value feeding each sink pin.
    conns: Vec<(Src, usize, usize)>,
    net_src: BTreeMap<String, Src>,
    errors: Vec<Diagnostic>,
    counter: usize,
}

impl<'a> Lowerer<'a> {
    fn add(&mut self, mut stn: Stn, span: Span, prefix: &str) -> usize {
        if stn.id.is_empty() {
            stn.id = format!("{prefix}{}", self.counter);
            self.counter += 1;
        }
        self.stns.push(stn);
        self.spans.push(span);
        self.stns.len() - 1
    }

    fn connect(&mut self, src: Src, stn: usize, pin: usize) {
        self.conns.push((src, stn, pin));
    }

    fn width_of(&self, net: &str) -> u32 {
        self.m.nets[net].width
    }

    fn run(&mut self) {
        let m = self.m;
        for p in &m.ports {
            let mut s = Stn::new(CcrsDocument::port_stn_id(&p.name), StnKind::Port, p.name.clone());
            match p.dir {
                Direction::Input => s.outputs.push(Pin::new(p.name.clone(), p.width)),
                Direction::Output => s.inputs.push(Pin::new(p.name.clone(), p.width)),
            }
            let idx = self.add(s, p.span, "");
            match p.dir {
                Direction::Input => {
                    self.net_src.insert(p.name.clone(), Src::Pin(idx, 0));
                }
                Direction::Output => self.connect(Src::Net(p.name.clone()), idx, 0),
            }
        }
        for a in &m.assigns {
            let e = resize(&a.expr, self.width_of(&a.target));
            let src = self.expr(&e, &Env::new());
            self.net_src.insert(a.target.clone(), src);
        }
        for p in &m.processes {
            let (blocking, clock) = match &p.kind {
                ProcessKind::Combinational => (true, None),
                ProcessKind::Clocked { clock } => (false, Some(clock.clone())),
            };
            let mut env = Env::new();
            self.stmt(&p.body, &mut env, blocking);
            for t in &p.targets {
                match &clock {
                    None => match env.get(t) {
                        Some(src) => {
                            self.net_src.insert(t.clone(), src.clone());
                        }
                        None => self.latch(t, p.span),
                    },
                    Some(clk) => {
                        let w = self.width_of(t);
                        let mut s = Stn::new(format!("reg.{t}"), StnKind::Timing, symbols::REGISTER);
                        s.inputs.push(Pin::new("d", w));
                        s.outputs.push(Pin::new("q", w));
                        s.attrs.insert("domain".into(), json!(clk));
                        s.attrs.insert("target".into(), json!(t));
                        let idx = self.add(s, p.span, "");
                        let d = env.get(t).cloned().unwrap_or_else(|| Src::Net(t.clone()));
                        self.connect(d, idx, 0);
                        self.net_src.insert(t.clone(), Src::Pin(idx, 0));
                    }
                }
            }
        }
        for inst in &m.instances {
            let mut s = Stn::new(format!("inst.{}", inst.name), StnKind::Instance, symbols::MODULE);
            s.attrs.insert("module".into(), json!(inst.module));
            s.attrs.insert("name".into(), json!(inst.name));
            for (port, _) in &inst.inputs {
                s.inputs.push(Pin::new(port.clone(), inst.port_widths[port]));
            }
            for (port, _) in &inst.outputs {
                s.outputs.push(Pin::new(port.clone(), inst.port_widths[port]));
            }
            let idx = self.add(s, inst.span, "");
            for (i, (port, e)) in inst.inputs.iter().enumerate() {
                let src = self.expr(&resize(e, inst.port_widths[port]), &Env::new());
                self.connect(src, idx, i);
            }
            for (j, (_, net)) in inst.outputs.iter().enumerate() {
                if let Some(net) = net {
                    self.net_src.insert(net.clone(), Src::Pin(idx, j));
                }
            }
        }
    }

    fn latch(&mut self, target: &str, span: Span) {
        self.errors.push(
            Diagnostic::error(Code::LatchLowering, format!("{target} keeps its value on some path of a combinational process; no latch template exists"))
                .at(span),
        );
    }

    fn constant(&mut self, value: u64, width: u32, span: Span) -> Src {
        let mut s = Stn::new("", StnKind::Constant, symbols::CONSTANT);
        s.outputs.push(Pin::new("k", width));
        s.attrs.insert("value".into(), json!(value & mask(width)));
        Src::Pin(self.add(s, span, "k"), 0)
    }

    fn data_op(&mut self, op: Opcode, inputs: Vec<(Src, u32)>, out: u32, span: Span, attrs: &[(&str, Value)]) -> Src {
        let mut s = Stn::new("", StnKind::DataOp, symbols::glyph(op));
        s.opcode = Some(op);
        s.inputs = inputs.iter().enumerate().map(|(i, (_, w))| Pin::new(format!("in{i}"), *w)).collect();
        s.outputs.push(Pin::new("out", out));
        for (k, v) in attrs {
            s.attrs.insert(k.to_string(), v.clone());
        }
        let idx = self.add(s, span, "op");
        for (i, (src, _)) in inputs.into_iter().enumerate() {
            self.connect(src, idx, i);
        }
        Src::Pin(idx, 0)
    }

    fn expr(&mut self, e: &Expr, env: &Env) -> Src {
        match &e.kind {
            ExprKind::Ident(n) => env.get(n).cloned().unwrap_or_else(|| Src::Net(n.clone())),
            ExprKind::Literal { value, .. } => self.constant(*value, e.width, e.span),
            ExprKind::Unary(op, x) => {
                let xs = self.expr(x, env);
                self.data_op(Opcode::from_unary(*op), vec![(xs, x.width)], e.width, e.span, &[])
            }
            ExprKind::Binary(op @ (BinaryOp::Shl | BinaryOp::Shr), l, r) => {
                let ls = self.expr(l, env);
                let amount = literal_value(r);
                self.data_op(Opcode::from_binary(*op), vec![(ls, l.width)], e.width, e.span, &[("amount", json!(amount))])
            }
            ExprKind::Binary(op, l, r) => {
                let opc = Opcode::from_binary(*op);
                let operands: Vec<&Expr> = if opc.is_flattenable() { flatten(e, opc) } else { vec![l, r] };
                let ins = operands.into_iter().map(|x| (self.expr(x, env), x.width)).collect();
                self.data_op(opc, ins, e.width, e.span, &[])
            }
            ExprKind::Concat(_) => {
                let operands = flatten(e, Opcode::Concat);
                let ins = operands.into_iter().map(|x| (self.expr(x, env), x.width)).collect();
                self.data_op(Opcode::Concat, ins, e.width, e.span, &[])
            }
            ExprKind::Slice { base, msb, lsb } => {
                let b = self.expr(base, env);
                self.data_op(Opcode::Slice, vec![(b, base.width)], e.width, e.span, &[("msb", json!(msb)), ("lsb", json!(lsb))])
            }
            ExprKind::Ternary(c, a, b) => {
                let cs = self.cond(c, env);
                let a_src = self.expr(&resize(a, e.width), env);
                let b_src = self.expr(&resize(b, e.width), env);
                let arms = vec![(cs, a_src)];
                self.branch(arms, b_src, e.width, e.span)
            }
            ExprKind::Select { .. } => unreachable!("selects are resolved during elaboration"),
        }
    }

    /// A 1-bit condition; wider values are reduced with 缩或.
    fn cond(&mut self, c: &Expr, env: &Env) -> Src {
        let src = self.expr(c, env);
        if c.width == 1 {
            src
        } else {
            self.data_op(Opcode::RedOr, vec![(src, c.width)], 1, c.span, &[])
        }
    }

    fn branch(&mut self, arms: Vec<(Src, Src)>, default: Src, width: u32, span: Span) -> Src {
        let mut s = Stn::new("", StnKind::Branch, symbols::COND);
        let mut rows = Vec::new();
        let mut srcs = Vec::new();
        for (i, (c, v)) in arms.into_iter().enumerate() {
            s.inputs.push(Pin::new(format!("c{i}"), 1));
            s.inputs.push(Pin::new(format!("v{i}"), width));
            rows.push(Row { cond: Some(format!("c{i}")), labels: None, value: format!("v{i}") }.to_value());
            srcs.push(c);
            srcs.push(v);
        }
        s.inputs.push(Pin::new("vd", width));
        rows.push(Row { cond: None, labels: None, value: "vd".into() }.to_value());
        srcs.push(default);
        s.outputs.push(Pin::new("y", width));
        s.attrs.insert("rows".into(), Value::Array(rows));
        let idx = self.add(s, span, "br");
        for (i, src) in srcs.into_iter().enumerate() {
            self.connect(src, idx, i);
        }
        Src::Pin(idx, 0)
    }

    fn stmt(&mut self, s: &Stmt, env: &mut Env, blocking: bool) {
        match &s.kind {
            StmtKind::Empty => {}
            StmtKind::Block(items) => items.iter().for_each(|x| self.stmt(x, env, blocking)),
            StmtKind::Assign { target, expr, .. } => {
                let e = resize(expr, self.width_of(target));
                let read_env = if blocking { env.clone() } else { Env::new() };
                let src = self.expr(&e, &read_env);
                env.insert(target.clone(), src);
            }
            StmtKind::If { .. } => self.if_chain(s, env, blocking),
            StmtKind::Case { .. } => self.case(s, env, blocking),
        }
    }

    /// Value a target holds when an arm does not assign it.
    fn incoming(&mut self, t: &str, env: &Env, blocking: bool, span: Span) -> Option<Src> {
        match env.get(t) {
            Some(s) => Some(s.clone()),
            None if !blocking => Some(Src::Net(t.to_string())),
            None => {
                self.latch(t, span);
                None
            }
        }
    }

    fn if_chain(&mut self, s: &Stmt, env: &mut Env, blocking: bool) {
        // `else if` continues the chain; `else begin if ... end` nests instead.
        let mut conds: Vec<(&Expr, &Stmt)> = Vec::new();
        let mut cur = s;
        let els = loop {
            let StmtKind::If { cond, then, els } = &cur.kind else { unreachable!() };
            conds.push((cond, then));
            match els {
                Some(e) if matches!(e.kind, StmtKind::If { .. }) => cur = e,
                other => break other.as_deref(),
            }
        };
        let read_env = if blocking { env.clone() } else { Env::new() };
        let mut arms: Vec<(Src, Env)> = Vec::new();
        for (c, body) in conds {
            let cs = self.cond(c, &read_env);
            let mut arm_env = env.clone();
            self.stmt(body, &mut arm_env, blocking);
            arms.push((cs, arm_env));
        }
        let mut else_env = env.clone();
        if let Some(e) = els {
            self.stmt(e, &mut else_env, blocking);
        }
        let targets = s.targets();
        for t in targets {
            let changed = |e: &Env| e.get(&t) != env.get(&t);
            let all_assign = arms.iter().all(|(_, e)| changed(e)) && els.is_some_and(|_| changed(&else_env));
            let incoming = if all_assign { None } else { self.incoming(&t, env, blocking, s.span) };
            if !all_assign && incoming.is_none() {
                continue;
            }
            let pick = |e: &Env| e.get(&t).cloned().or_else(|| incoming.clone()).expect("value or incoming");
            let rows: Vec<(Src, Src)> = arms.iter().map(|(c, e)| (c.clone(), pick(e))).collect();
            let default = if els.is_some() { pick(&else_env) } else { incoming.clone().expect("incoming") };
            let w = self.width_of(&t);
            let out = self.branch(rows, default, w, s.span);
            env.insert(t, out);
        }
    }

    fn case(&mut self, s: &Stmt, env: &mut Env, blocking: bool) {
        let StmtKind::Case { selector, items, default } = &s.kind else { unreachable!() };
        let read_env = if blocking { env.clone() } else { Env::new() };
        let sel = self.expr(selector, &read_env);
        let sel_w = selector.width;
        let mut seen = BTreeSet::new();
        let mut label_rows: Vec<Vec<u64>> = Vec::new();
        for it in items {
            let mut labels = Vec::new();
            for l in &it.labels {
                let v = literal_value(l);
                if v & !mask(sel_w) != 0 {
                    self.errors.push(Diagnostic::error(Code::Range, format!("case label {v} does not fit a {sel_w}-bit selector")).at(l.span));
                } else if !seen.insert(v) {
                    self.errors.push(Diagnostic::error(Code::DupCase, format!("duplicate case label {v}")).at(l.span));
                }
                labels.push(v);
            }
            label_rows.push(labels);
        }
        let full = case_is_full(seen.iter().copied(), sel_w);
        let mut arms: Vec<Env> = Vec::new();
        for it in items {
            let mut e = env.clone();
            self.stmt(&it.body, &mut e, blocking);
            arms.push(e);
        }
        let mut def_env = env.clone();
        if let Some(d) = default {
            self.stmt(d, &mut def_env, blocking);
        }
        let has_default_row = default.is_some() || !full;
        for t in s.targets() {
            let changed = |e: &Env| e.get(&t) != env.get(&t);
            let all_assign = arms.iter().all(changed) && (!has_default_row || (default.is_some() && changed(&def_env)));
            let incoming = if all_assign { None } else { self.incoming(&t, env, blocking, s.span) };
            if !all_assign && incoming.is_none() {
                continue;
            }
            let pick = |e: &Env| e.get(&t).cloned().or_else(|| incoming.clone()).expect("value or incoming");
            let w = self.width_of(&t);
            let mut stn = Stn::new("", StnKind::CaseSelect, symbols::SELECT);
            stn.inputs.push(Pin::new("sel", sel_w));
            let mut srcs = vec![sel.clone()];
            let mut rows = Vec::new();
            for (i, (labels, e)) in label_rows.iter().zip(&arms).enumerate() {
                stn.inputs.push(Pin::new(format!("v{i}"), w));
                rows.push(Row { cond: None, labels: Some(labels.clone()), value: format!("v{i}") }.to_value());
                srcs.push(pick(e));
            }
            if has_default_row {
                stn.inputs.push(Pin::new("vd", w));
                rows.push(Row { cond: None, labels: None, value: "vd".into() }.to_value());
                srcs.push(if default.is_some() { pick(&def_env) } else { incoming.clone().expect("incoming") });
            }
            stn.outputs.push(Pin::new("y", w));
            stn.attrs.insert("rows".into(), Value::Array(rows));
            let idx = self.add(stn, s.span, "cs");
            for (i, src) in srcs.into_iter().enumerate() {
                self.connect(src, idx, i);
            }
            env.insert(t, Src::Pin(idx, 0));
        }
    }

    fn resolve(&self, src: &Src) -> Option<(usize, usize)> {
        let mut cur = src.clone();
        for _ in 0..=self.net_src.len() {
            match cur {
                Src::Pin(s, p) => return Some((s, p)),
                Src::Net(n) => cur = self.net_src.get(&n)?.clone(),
            }
        }
        None
    }

    fn finish(mut self) -> CcrsDocument {
        let m = self.m;
        let mut doc = CcrsDocument::new(m.name.clone());
        doc.ports = m
            .ports
            .iter()
            .map(|p| DocPort {
                name: p.name.clone(),
                direction: match p.dir {
                    Direction::Input => PortDirection::Input,
                    Direction::Output => PortDirection::Output,
                },
                width: p.width,
            })
            .collect();
        let mut clocks: Vec<String> = m
            .processes
            .iter()
            .filter_map(|p| match &p.kind {
                ProcessKind::Clocked { clock } => Some(clock.clone()),
                ProcessKind::Combinational => None,
            })
            .collect();
        clocks.sort();
        clocks.dedup();
        doc.clock_domains = clocks.into_iter().map(|c| ClockDomain { id: c.clone(), clock: c }).collect();

        // Group sinks by source pin, in order of first appearance.
        let mut order: Vec<(usize, usize)> = Vec::new();
        let mut sinks: BTreeMap<(usize, usize), Vec<Endpoint>> = BTreeMap::new();
        let conns = std::mem::take(&mut self.conns);
        for (src, stn, pin) in &conns {
            let Some(key) = self.resolve(src) else { continue };
            let entry = sinks.entry(key).or_insert_with(|| {
                order.push(key);
                Vec::new()
            });
            entry.push(Endpoint::new(self.stns[*stn].id.clone(), *pin));
        }
        for (i, key) in order.iter().enumerate() {
            let s = &self.stns[key.0];
            doc.lwcs.push(Lwc {
                id: format!("w{i}"),
                width: s.outputs[key.1].width,
                source: Endpoint::new(s.id.clone(), key.1),
                sinks: sinks.remove(key).unwrap_or_default(),
            });
        }

        // Nest a Branch or CaseSelect under the one Branch or CaseSelect whose value slot it alone feeds.
        let index: BTreeMap<String, usize> = self.stns.iter().enumerate().map(|(i, s)| (s.id.clone(), i)).collect();
        let mut parent: Vec<Option<usize>> = vec![None; self.stns.len()];
        for l in &doc.lwcs {
            let src = index[&l.source.stn];
            if !matches!(self.stns[src].kind, StnKind::Branch | StnKind::CaseSelect) || l.sinks.len() != 1 {
                continue;
            }
            let dst = index[&l.sinks[0].stn];
            let d = &self.stns[dst];
            if !matches!(d.kind, StnKind::Branch | StnKind::CaseSelect) {
                continue;
            }
            let pin = &d.inputs[l.sinks[0].pin].name;
            let is_value = d.rows().unwrap_or_default().iter().any(|r| &r.value == pin);
            if is_value {
                parent[src] = Some(dst);
            }
        }
        for (s, span) in self.stns.iter().zip(&self.spans) {
            doc.metadata.trace.insert(s.id.clone(), *span);
        }
        let mut slots: Vec<Option<Stn>> = self.stns.into_iter().map(Some).collect();
        // Children are created before their parents, so attach in reverse creation order.
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); slots.len()];
        for (c, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                kids[*p].push(c);
            }
        }
        fn take(i: usize, slots: &mut Vec<Option<Stn>>, kids: &[Vec<usize>]) -> Stn {
            let mut s = slots[i].take().expect("each Stn has one parent");
            for &c in &kids[i] {
                let child = take(c, slots, kids);
                s.children.push(child);
            }
            s
        }
        for (i, p) in parent.iter().enumerate() {
            if p.is_none() {
                let s = take(i, &mut slots, &kids);
                doc.stns.push(s);
            }
        }
        doc
    }
}

/// Operands of a nested application of `op`, merged into one list.
fn flatten(e: &Expr, op: Opcode) -> Vec<&Expr> {
    let mut out = Vec::new();
    fn go<'e>(e: &'e Expr, op: Opcode, out: &mut Vec<&'e Expr>) {
        match &e.kind {
            ExprKind::Binary(b, l, r) if Opcode::from_binary(*b) == op => {
                go(l, op, out);
                go(r, op, out);
            }
            ExprKind::Concat(items) if op == Opcode::Concat => items.iter().for_each(|x| go(x, op, out)),
            _ => out.push(e),
        }
    }
    match &e.kind {
        ExprKind::Binary(_, l, r) => {
            go(l, op, &mut out);
            go(r, op, &mut out);
        }
        ExprKind::Concat(items) => items.iter().for_each(|x| go(x, op, &mut out)),
        _ => out.push(e),
    }
    out
}

/// Zero-extend or truncate `e` to `width` with explicit nodes.
pub fn resize(e: &Expr, width: u32) -> Expr {
    if e.width == width {
        return e.clone();
    }
    if let ExprKind::Literal { value, .. } = e.kind {
        return Expr::with_width(ExprKind::Literal { width: Some(width), value: value & mask(width) }, e.span, width);
    }
    if e.width < width {
        let pad = Expr::with_width(ExprKind::Literal { width: Some(width - e.width), value: 0 }, e.span, width - e.width);
        let mut items = vec![pad];
        match &e.kind {
            ExprKind::Concat(inner) => items.extend(inner.iter().cloned()),
            _ => items.push(e.clone()),
        }
        Expr::with_width(ExprKind::Concat(items), e.span, width)
    } else {
        Expr::with_width(ExprKind::Slice { base: Box::new(e.clone()), msb: width - 1, lsb: 0 }, e.span, width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::{elaborate, parse_source};
    use crate::ir::validate;

    fn lower(src: &str) -> Result<CcrsDocument, Vec<Diagnostic>> {
        let d = elaborate(&parse_source(src).unwrap()).unwrap();
        let top = d.top().unwrap().to_string();
        lower_module(&d, &top)
    }

    fn ok(src: &str) -> CcrsDocument {
        let doc = lower(src).unwrap();
        assert_eq!(validate(&doc), vec![]);
        doc
    }

    fn count(doc: &CcrsDocument, kind: StnKind) -> usize {
        doc.all_stns().iter().filter(|(s, _)| s.kind == kind).count()
    }

    #[test]
    fn single_and() {
        let doc = ok("module m(input a, input b, output y); assign y = a & b; endmodule");
        assert_eq!(count(&doc, StnKind::DataOp), 1);
        let op = doc.all_stns().into_iter().find(|(s, _)| s.kind == StnKind::DataOp).unwrap().0;
        assert_eq!(op.label, "位与");
        assert_eq!(op.inputs.len(), 2);
        assert_eq!(doc.lwcs.len(), 3);
        assert!(doc.lwcs.iter().all(|l| l.width == 1));
    }

    #[test]
    fn or_of_and_and_not() {
        let doc = ok("module m(input a, input b, input c, output y); assign y = (a & b) | ~c; endmodule");
        let labels: BTreeSet<String> =
            doc.all_stns().iter().filter(|(s, _)| s.kind == StnKind::DataOp).map(|(s, _)| s.label.clone()).collect();
        assert_eq!(count(&doc, StnKind::DataOp), 3);
        assert_eq!(labels, ["位与", "位或", "位非"].into_iter().map(String::from).collect());
    }

    #[test]
    fn literal_is_constant() {
        let doc = ok("module m(output y); assign y = 1'b0; endmodule");
        let k = doc.all_stns().into_iter().find(|(s, _)| s.kind == StnKind::Constant).unwrap().0;
        assert!(k.inputs.is_empty());
        assert_eq!(k.outputs[0].width, 1);
    }

    #[test]
    fn passthrough_is_a_direct_lwc() {
        let doc = ok("module m(input a, output y); assign y = a; endmodule");
        assert_eq!(doc.stns.len(), 2);
        assert_eq!(doc.lwcs.len(), 1);
        assert_eq!(doc.lwcs[0].source.stn, "port.a");
        assert_eq!(doc.lwcs[0].sinks[0].stn, "port.y");
    }

    #[test]
    fn full_adder_has_five_operators() {
        let doc = ok(crate::corpus::get("full_adder").unwrap().source);
        assert_eq!(count(&doc, StnKind::DataOp), 5);
    }

    #[test]
    fn if_chain_rows() {
        let doc = ok(
            "module m(input c1, input c2, input v1, input v2, input v3, output reg y);\n\
             always @(*) if (c1) y = v1; else if (c2) y = v2; else y = v3; endmodule",
        );
        assert_eq!(count(&doc, StnKind::Branch), 1);
        let b = doc.all_stns().into_iter().find(|(s, _)| s.kind == StnKind::Branch).unwrap().0;
        let rows = b.rows().unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].cond.as_deref(), Some("c0"));
        assert!(rows[2].is_default());
        for (pin, port) in [(1, "port.v1"), (3, "port.v2"), (4, "port.v3")] {
            assert_eq!(doc.driver(&b.id, pin).unwrap().source.stn, port);
        }
    }

    #[test]
    fn nested_if_becomes_child() {
        let doc = ok(
            "module m(input c1, input c2, input a, input b, input d, output reg y);\n\
             always @(*) if (c1) begin if (c2) y = a; else y = b; end else y = d; endmodule",
        );
        assert_eq!(doc.stns.iter().filter(|s| s.kind == StnKind::Branch).count(), 1);
        let outer = doc.stns.iter().find(|s| s.kind == StnKind::Branch).unwrap();
        assert_eq!(outer.children.len(), 1);
        let inner = &outer.children[0];
        let l = doc.lwcs.iter().find(|l| l.source.stn == inner.id).unwrap();
        assert_eq!(l.sinks, vec![Endpoint::new(outer.id.clone(), 1)]);
    }

    #[test]
    fn case_rows_and_coverage() {
        let doc = ok(
            "module m(input s, input a, input b, output reg y);\n\
             always @(*) case (s) 0: y = a; 1: y = b; default: y = 0; endcase endmodule",
        );
        let c = doc.all_stns().into_iter().find(|(s, _)| s.kind == StnKind::CaseSelect).unwrap().0;
        let rows = c.rows().unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].labels, Some(vec![0]));
        assert!(rows[2].is_default());

        let doc = ok(
            "module m(input [1:0] s, input a, output reg y);\n\
             always @(*) case (s) 0: y = a; 1: y = 1; 2: y = 0; 3: y = ~a; endcase endmodule",
        );
        let c = doc.all_stns().into_iter().find(|(s, _)| s.kind == StnKind::CaseSelect).unwrap().0;
        assert!(c.rows().unwrap().iter().all(|r| !r.is_default()));
    }

    #[test]
    fn duplicate_case_label() {
        let err = lower("module m(input s, input a, output reg y); always @(*) case (s) 1: y = a; 1: y = 0; default: y = 1; endcase endmodule")
            .unwrap_err();
        assert_eq!(err[0].code, Code::DupCase);
    }

    #[test]
    fn combinational_if_without_default_is_rejected() {
        let src = "module m(input c, input d, output reg q); always @(*) if (c) q = d; endmodule";
        let d = elaborate(&parse_source(src).unwrap()).unwrap();
        assert_eq!(d.warnings[0].code, Code::Latch);
        let err = lower_module(&d, "m").unwrap_err();
        assert_eq!(err[0].code, Code::LatchLowering);
        // An earlier assignment supplies the default row instead.
        ok("module m(input c, input d, output reg q); always @(*) begin q = 0; if (c) q = d; end endmodule");
    }

    #[test]
    fn register_and_feedback() {
        let doc = ok("module m(input clk, input d, output reg q); always @(posedge clk) q <= d; endmodule");
        let t = doc.stn("reg.q").unwrap();
        assert_eq!(t.label, "寄存");
        assert_eq!(t.attr_str("domain"), Some("clk"));
        assert_eq!(doc.driver("reg.q", 0).unwrap().source.stn, "port.d");
        assert_eq!(doc.driver("port.q", 0).unwrap().source.stn, "reg.q");

        let doc = ok("module m(input clk, output reg [1:0] q); always @(posedge clk) q <= q + 1; endmodule");
        let add = doc.driver("reg.q", 0).unwrap().source.stn.clone();
        assert_eq!(doc.stn(&add).unwrap().label, "加");
        assert_eq!(doc.driver(&add, 0).unwrap().source.stn, "reg.q");
    }

    #[test]
    fn combinational_process_has_no_register() {
        let doc = ok("module m(input a, input b, output reg y); always @(*) y = a ^ b; endmodule");
        assert_eq!(count(&doc, StnKind::Timing), 0);
        assert_eq!(count(&doc, StnKind::DataOp), 1);
    }

    #[test]
    fn ternary_is_a_two_row_branch() {
        let doc = ok(crate::corpus::get("mux2").unwrap().source);
        let b = doc.all_stns().into_iter().find(|(s, _)| s.kind == StnKind::Branch).unwrap().0;
        assert_eq!(b.rows().unwrap().len(), 2);
        assert_eq!(count(&doc, StnKind::DataOp), 0);
    }

    #[test]
    fn instances_mirror_child_ports() {
        let doc = ok(crate::corpus::get("hier_top").unwrap().source);
        let i = doc.stn("inst.ha0").unwrap();
        assert_eq!(i.label, "模块");
        assert_eq!(i.attr_str("module"), Some("half_adder"));
        assert_eq!(i.inputs.len() + i.outputs.len(), 4);
        assert_eq!(doc.metadata.submodules.len(), 1);
        assert_eq!(doc.metadata.submodules[0].module, "half_adder");
    }

    #[test]
    fn named_wire_read_twice_shares_one_lwc() {
        let doc = ok("module m(input a, input b, output y, output z); wire t = a & b; assign y = ~t; assign z = t ^ a; endmodule");
        let and = doc.all_stns().into_iter().find(|(s, _)| s.label == "位与").unwrap().0.id.clone();
        let l = doc.lwcs.iter().find(|l| l.source.stn == and).unwrap();
        assert_eq!(l.sinks.len(), 2);
    }

    #[test]
    fn widening_and_narrowing_are_explicit() {
        let doc = ok("module m(input [1:0] a, input [5:0] b, output [3:0] y, output [3:0] z); assign y = a; assign z = b; endmodule");
        let ops: Vec<Opcode> = doc.all_stns().iter().filter_map(|(s, _)| s.opcode).collect();
        assert!(ops.contains(&Opcode::Concat) && ops.contains(&Opcode::Slice));
    }

    #[test]
    fn trace_covers_every_stn() {
        let doc = ok(crate::corpus::get("traffic_light").unwrap().source);
        for (s, _) in doc.all_stns() {
            assert!(doc.metadata.trace.contains_key(&s.id), "{}", s.id);
        }
    }
}
