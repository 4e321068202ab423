//! Chart document back to HDL text.
//!
//! Every output of a Branch, CaseSelect, Timing or Instance gets a named net,
//! as does any value with other than one reader. A DataOp or Constant read
//! exactly once is written inline, unless inlining would change how the text
//! lowers again (a slice base, or an operand of the same flattenable op).
//! Nets and instances are named in canonical order and name hints are not
//! used, so documents with equal canonical forms give identical text.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::diag::{has_errors, Diagnostic};
use crate::hdl::lexer::KEYWORDS;
use crate::ir::{canonical_order, validate, CcrsDocument, PortDirection, Stn, StnKind};
use crate::ops::Opcode;

/// Binding strength of names, literals, concatenations and selects.
const ATOM: u8 = 100;
/// Unary operators bind tighter than any binary one. A unary operand is
/// always parenthesized so that `~&x` never lexes as one operator.
const UNARY: u8 = 50;

/// Emit the document and every submodule it instantiates, children first.
pub fn emit(doc: &CcrsDocument) -> Result<String, Vec<Diagnostic>> {
    let diags = validate(doc);
    if has_errors(&diags) {
        return Err(diags);
    }
    let mut out = String::new();
    for sub in &doc.metadata.submodules {
        out.push_str(&emit_module(sub));
        out.push('\n');
    }
    out.push_str(&emit_module(doc));
    Ok(out)
}

type PinRef<'a> = (&'a str, usize);

fn range(width: u32) -> String {
    if width == 1 {
        String::new()
    } else {
        format!("[{}:0] ", width - 1)
    }
}

struct Emitter<'a> {
    doc: &'a CcrsDocument,
    stns: BTreeMap<&'a str, &'a Stn>,
    order: Vec<String>,
    source_of: BTreeMap<PinRef<'a>, PinRef<'a>>,
    sinks_of: BTreeMap<PinRef<'a>, Vec<PinRef<'a>>>,
    names: BTreeMap<PinRef<'a>, String>,
    inst_names: BTreeMap<&'a str, String>,
    /// Branches and CaseSelects written inside the process of the register they feed.
    into_reg: BTreeSet<&'a str>,
    nested: BTreeSet<&'a str>,
    used: BTreeSet<String>,
    counter: usize,
}

/// Emit one module without its submodules. The document must validate.
pub fn emit_module(doc: &CcrsDocument) -> String {
    let mut e = Emitter {
        doc,
        stns: doc.stn_map(),
        order: canonical_order(doc),
        source_of: BTreeMap::new(),
        sinks_of: BTreeMap::new(),
        names: BTreeMap::new(),
        inst_names: BTreeMap::new(),
        into_reg: BTreeSet::new(),
        nested: BTreeSet::new(),
        used: doc.ports.iter().map(|p| p.name.clone()).chain([doc.module.clone()]).collect(),
        counter: 0,
    };
    e.connect();
    e.assign_names();
    e.write()
}

impl<'a> Emitter<'a> {
    fn stn(&self, id: &str) -> &'a Stn {
        self.stns[id]
    }

    fn ordered(&self) -> Vec<&'a Stn> {
        self.order.iter().map(|id| self.stn(id)).collect()
    }

    fn connect(&mut self) {
        for l in &self.doc.lwcs {
            let src = (l.source.stn.as_str(), l.source.pin);
            for s in &l.sinks {
                let sink = (s.stn.as_str(), s.pin);
                self.source_of.insert(sink, src);
                self.sinks_of.entry(src).or_default().push(sink);
            }
        }
        for (s, parent) in self.doc.all_stns() {
            if parent.is_some() {
                self.nested.insert(s.id.as_str());
            }
        }
        for s in self.ordered() {
            if matches!(s.kind, StnKind::Branch | StnKind::CaseSelect) && !self.nested.contains(s.id.as_str()) {
                if let [sink] = self.sinks(s.id.as_str(), 0) {
                    if self.stn(sink.0).kind == StnKind::Timing {
                        self.into_reg.insert(s.id.as_str());
                    }
                }
            }
        }
    }

    fn sinks(&self, stn: &'a str, pin: usize) -> &[PinRef<'a>] {
        self.sinks_of.get(&(stn, pin)).map(Vec::as_slice).unwrap_or(&[])
    }

    fn needs_name(&self, s: &'a Stn, pin: usize) -> bool {
        let id = s.id.as_str();
        if self.nested.contains(id) || self.into_reg.contains(id) {
            return false;
        }
        let sinks = self.sinks(id, pin);
        match s.kind {
            StnKind::Port => false,
            StnKind::Branch | StnKind::CaseSelect | StnKind::Timing => true,
            StnKind::Instance => !sinks.is_empty(),
            StnKind::Constant | StnKind::DataOp => {
                let [sink] = sinks else { return true };
                let reader = self.stn(sink.0);
                reader.kind == StnKind::Port
                    || reader.opcode == Some(Opcode::Slice)
                    || (s.opcode.is_some_and(Opcode::is_flattenable) && reader.opcode == s.opcode)
                    || (s.opcode == Some(Opcode::Concat) && reader.opcode == Some(Opcode::Concat))
            }
        }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        loop {
            let n = format!("{prefix}{}", self.counter);
            self.counter += 1;
            if !self.used.contains(&n) && !KEYWORDS.contains(&n.as_str()) {
                self.used.insert(n.clone());
                return n;
            }
        }
    }

    fn assign_names(&mut self) {
        let stns = self.ordered();
        let mut pending = Vec::new();
        for s in &stns {
            if s.kind == StnKind::Port {
                if let Some(p) = s.outputs.first() {
                    self.names.insert((s.id.as_str(), 0), p.name.clone());
                }
                continue;
            }
            for pin in 0..s.outputs.len() {
                if !self.needs_name(s, pin) {
                    continue;
                }
                // A value read by an output port takes the first such port's name.
                let port = self
                    .doc
                    .ports
                    .iter()
                    .filter(|p| p.direction == PortDirection::Output)
                    .find(|p| self.sinks(s.id.as_str(), pin).iter().any(|k| k.0 == CcrsDocument::port_stn_id(&p.name)));
                match port {
                    Some(p) => {
                        self.names.insert((s.id.as_str(), pin), p.name.clone());
                    }
                    None => pending.push((*s, pin)),
                }
            }
        }
        for (s, pin) in pending {
            let n = self.fresh("n");
            self.names.insert((s.id.as_str(), pin), n);
        }
        self.counter = 0;
        for s in &stns {
            if s.kind == StnKind::Instance {
                let n = self.fresh("u");
                self.inst_names.insert(s.id.as_str(), n);
            }
        }
    }

    /// Text for the value on a source pin.
    fn value(&self, src: PinRef<'a>) -> String {
        self.operand(src).0
    }

    fn input(&self, s: &'a Stn, pin: usize) -> String {
        self.value(self.source_of[&(s.id.as_str(), pin)])
    }

    /// Text and binding strength of a source pin's value.
    fn operand(&self, src: PinRef<'a>) -> (String, u8) {
        match self.names.get(&src) {
            Some(n) => (n.clone(), ATOM),
            None => self.expr_of(self.stn(src.0)),
        }
    }

    fn expr_of(&self, s: &'a Stn) -> (String, u8) {
        let arg = |i: usize| self.operand(self.source_of[&(s.id.as_str(), i)]);
        let paren = |(text, p): (String, u8), min: u8| if p < min { format!("({text})") } else { text };
        match s.kind {
            StnKind::Constant => (format!("{}'d{}", s.outputs[0].width, s.attr_u64("value").unwrap_or(0)), ATOM),
            StnKind::DataOp => {
                let op = s.opcode.expect("validated DataOp has an opcode");
                match op {
                    Opcode::Concat => {
                        let items: Vec<String> = (0..s.inputs.len()).map(|i| arg(i).0).collect();
                        (format!("{{{}}}", items.join(", ")), ATOM)
                    }
                    Opcode::Slice => {
                        let (m, l) = s.slice_range().expect("validated slice has a range");
                        let base = arg(0).0;
                        (if m == l { format!("{base}[{m}]") } else { format!("{base}[{m}:{l}]") }, ATOM)
                    }
                    _ => {
                        let sym = op.hdl_symbol().expect("operator symbol");
                        match op.binary_op() {
                            None => (format!("{sym}{}", paren(arg(0), ATOM)), UNARY),
                            Some(b) => {
                                let p = b.precedence();
                                if matches!(op, Opcode::Shl | Opcode::Shr) {
                                    let amount = s.attr_u64("amount").unwrap_or(0);
                                    return (format!("{} {sym} {amount}", paren(arg(0), p)), p);
                                }
                                // Left-associative: later operands need a strictly stronger binding.
                                let parts: Vec<String> =
                                    (0..s.inputs.len()).map(|i| paren(arg(i), if i == 0 { p } else { p + 1 })).collect();
                                (parts.join(&format!(" {sym} ")), p)
                            }
                        }
                    }
                }
            }
            _ => unreachable!("{} is always named", s.id),
        }
    }

    /// Statement assigning the output of Branch or CaseSelect `s` to `target`.
    fn stmt(&self, s: &'a Stn, target: &str, op: &str, indent: usize, out: &mut String) {
        let rows = s.rows().expect("validated rows");
        // One row: `head` at `at` columns, then the assignment or a nested block.
        let arm = |at: usize, head: &str, value: &str, out: &mut String| {
            let pad = " ".repeat(at);
            let pin = s.input_index(value).expect("row value pin");
            let src = self.source_of[&(s.id.as_str(), pin)];
            match s.children.iter().find(|c| c.id == src.0) {
                Some(child) => {
                    let _ = writeln!(out, "{pad}{head} begin");
                    self.stmt(child, target, op, at + 2, out);
                    let _ = writeln!(out, "{pad}end");
                }
                None => {
                    let _ = writeln!(out, "{pad}{head} {target} {op} {};", self.value(src));
                }
            }
        };
        if s.kind == StnKind::Branch {
            for (i, r) in rows.iter().enumerate() {
                let head = match &r.cond {
                    Some(c) => {
                        let cond = self.input(s, s.input_index(c).expect("row cond pin"));
                        format!("{}if ({cond})", if i == 0 { "" } else { "else " })
                    }
                    None => "else".to_string(),
                };
                arm(indent, &head, &r.value, out);
            }
        } else {
            let sel_w = s.inputs[0].width;
            let pad = " ".repeat(indent);
            let _ = writeln!(out, "{pad}case ({})", self.input(s, 0));
            for r in &rows {
                let head = match &r.labels {
                    Some(ls) => {
                        let ls: Vec<String> = ls.iter().map(|l| format!("{sel_w}'d{l}")).collect();
                        format!("{}:", ls.join(", "))
                    }
                    None => "default:".to_string(),
                };
                arm(indent + 2, &head, &r.value, out);
            }
            let _ = writeln!(out, "{pad}endcase");
        }
    }

    fn write(&self) -> String {
        let doc = self.doc;
        let mut out = String::new();
        let reg_ports: BTreeSet<&str> = self
            .names
            .iter()
            .filter(|((id, _), _)| matches!(self.stn(id).kind, StnKind::Branch | StnKind::CaseSelect | StnKind::Timing))
            .map(|(_, n)| n.as_str())
            .collect();
        let header: Vec<String> = doc
            .ports
            .iter()
            .map(|p| match p.direction {
                PortDirection::Input => format!("input {}{}", range(p.width), p.name),
                PortDirection::Output => {
                    let kind = if reg_ports.contains(p.name.as_str()) { "reg " } else { "" };
                    format!("output {kind}{}{}", range(p.width), p.name)
                }
            })
            .collect();
        let _ = writeln!(out, "module {}({});", doc.module, header.join(", "));

        let port_names: BTreeSet<&str> = doc.ports.iter().map(|p| p.name.as_str()).collect();
        let stns = self.ordered();
        for s in &stns {
            for (pin, p) in s.outputs.iter().enumerate() {
                let Some(n) = self.names.get(&(s.id.as_str(), pin)) else { continue };
                if port_names.contains(n.as_str()) {
                    continue;
                }
                let kind = if matches!(s.kind, StnKind::Branch | StnKind::CaseSelect | StnKind::Timing) { "reg" } else { "wire" };
                let _ = writeln!(out, "  {kind} {}{n};", range(p.width));
            }
        }

        for s in &stns {
            let id = s.id.as_str();
            match s.kind {
                StnKind::Port => {}
                StnKind::Constant | StnKind::DataOp => {
                    if let Some(n) = self.names.get(&(id, 0)) {
                        let _ = writeln!(out, "  assign {n} = {};", self.expr_of(s).0);
                    }
                }
                StnKind::Branch | StnKind::CaseSelect => {
                    if let Some(n) = self.names.get(&(id, 0)) {
                        let _ = writeln!(out, "  always @(*) begin");
                        self.stmt(s, n, "=", 4, &mut out);
                        let _ = writeln!(out, "  end");
                    }
                }
                StnKind::Timing => {
                    let q = &self.names[&(id, 0)];
                    let clock = s
                        .attr_str("domain")
                        .and_then(|d| doc.clock_domains.iter().find(|c| c.id == d))
                        .map(|c| c.clock.as_str())
                        .expect("validated domain");
                    let _ = writeln!(out, "  always @(posedge {clock}) begin");
                    let src = self.source_of[&(id, 0)];
                    if self.into_reg.contains(src.0) {
                        self.stmt(self.stn(src.0), q, "<=", 4, &mut out);
                    } else {
                        let _ = writeln!(out, "    {q} <= {};", self.value(src));
                    }
                    let _ = writeln!(out, "  end");
                }
                StnKind::Instance => {
                    let mut binds = Vec::new();
                    for (i, p) in s.inputs.iter().enumerate() {
                        binds.push(format!(".{}({})", p.name, self.input(s, i)));
                    }
                    for (j, p) in s.outputs.iter().enumerate() {
                        binds.push(format!(".{}({})", p.name, self.names.get(&(id, j)).map(String::as_str).unwrap_or("")));
                    }
                    let module = s.attr_str("module").expect("validated instance module");
                    let _ = writeln!(out, "  {module} {} ({});", self.inst_names[id], binds.join(", "));
                }
            }
        }

        for p in doc.ports.iter().filter(|p| p.direction == PortDirection::Output) {
            let pid = CcrsDocument::port_stn_id(&p.name);
            let Some(src) = self.source_of.get(&(pid.as_str(), 0)) else { continue };
            let v = self.value(*src);
            if v != p.name {
                let _ = writeln!(out, "  assign {} = {v};", p.name);
            }
        }
        out.push_str("endmodule\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::{elaborate, parse_source};
    use crate::ir::canonical_form;
    use crate::templater::lower_module;

    fn lower(src: &str) -> CcrsDocument {
        let d = elaborate(&parse_source(src).unwrap()).unwrap();
        let top = d.top().unwrap().to_string();
        lower_module(&d, &top).unwrap()
    }

    fn round(src: &str) -> String {
        let doc = lower(src);
        let text = emit(&doc).unwrap();
        assert_eq!(canonical_form(&lower(&text)), canonical_form(&doc), "{text}");
        text
    }

    #[test]
    fn single_and_becomes_one_assign() {
        let text = round("module t(input a, input b, output y); assign y = a & b; endmodule");
        assert!(text.contains("  assign y = a & b;\n"), "{text}");
    }

    #[test]
    fn branch_becomes_if_else_chain() {
        let text = round(
            "module t(input c1, input c2, input [1:0] v1, input [1:0] v2, input [1:0] v3, output reg [1:0] y);
             always @(*) if (c1) y = v1; else if (c2) y = v2; else y = v3; endmodule",
        );
        assert!(text.contains("    if (c1) y = v1;\n    else if (c2) y = v2;\n    else y = v3;\n"), "{text}");
        assert!(text.contains("output reg [1:0] y"));
    }

    #[test]
    fn parentheses_only_where_precedence_needs_them() {
        let t = round("module t(input [3:0] a, input [3:0] b, input [3:0] c, output [3:0] y, output [3:0] z, output w);
            assign y = (a + b) + c; assign z = a - (b - c); assign w = (a[0] | b[0]) & c[0]; endmodule");
        assert!(t.contains("assign y = a + b + c;"), "{t}");
        assert!(t.contains("assign z = a - (b - c);"), "{t}");
        assert!(t.contains("assign w = (a[0] | b[0]) & c[0];"), "{t}");
    }

    #[test]
    fn nested_unary_operators_stay_separate_tokens() {
        let t = round("module t(input [3:0] a, output y); assign y = ~(&a); endmodule");
        assert!(t.contains("assign y = ~(&a);"), "{t}");
    }

    #[test]
    fn shared_values_get_one_named_net() {
        let t = round("module t(input a, input b, output y, output z); wire s; assign s = a ^ b; assign y = s & a; assign z = s | b; endmodule");
        assert!(t.contains("  wire n0;\n") && t.contains("assign n0 = a ^ b;"), "{t}");
    }

    #[test]
    fn register_process_and_case() {
        for name in ["counter4", "traffic_light", "mux4", "alu_slice"] {
            round(crate::corpus::get(name).unwrap().source);
        }
        let t = round(crate::corpus::get("counter2").unwrap().source);
        assert!(t.contains("always @(posedge clk) begin"), "{t}");
        assert!(t.contains("q <= q + 2'd1;"), "{t}");
    }

    #[test]
    fn text_depends_only_on_canonical_form() {
        let mut doc = lower(crate::corpus::get("traffic_light").unwrap().source);
        let a = emit(&doc).unwrap();
        for s in &mut doc.stns {
            s.attrs.insert("target".into(), serde_json::json!("renamed"));
        }
        doc.stns.reverse();
        doc.lwcs.reverse();
        assert_eq!(emit(&doc).unwrap(), a);
    }

    #[test]
    fn invalid_documents_are_refused() {
        let mut doc = lower("module t(input a, input b, output y); assign y = a & b; endmodule");
        doc.lwcs.clear();
        let errs = emit(&doc).unwrap_err();
        assert!(errs.iter().any(|d| d.code == crate::diag::Code::PinDriver), "{errs:?}");
    }
}
