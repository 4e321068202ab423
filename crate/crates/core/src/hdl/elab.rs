//! Elaboration: name resolution, width annotation, driver and cycle checks.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::ast::*;
use super::lexer::MAX_WIDTH;
use crate::diag::{Code, Diagnostic, Severity, Span};
use crate::ops::{min_width, Opcode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElaboratedDesign {
    /// Modules ordered so that every child precedes its parents.
    pub modules: Vec<ElabModule>,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElabPort {
    pub name: String,
    pub dir: Direction,
    pub width: u32,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Input,
    Assign(usize),
    Process(usize),
    Instance(usize),
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub width: u32,
    /// Index of the least significant bit as declared (`[7:4]` has offset 4).
    pub offset: u32,
    pub kind: NetKind,
    pub dir: Option<Direction>,
    pub driver: Driver,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcessKind {
    Clocked { clock: String },
    Combinational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Process {
    pub kind: ProcessKind,
    pub body: Stmt,
    pub targets: Vec<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElabInstance {
    pub module: String,
    pub name: String,
    /// Input bindings in the child's port order.
    pub inputs: Vec<(String, Expr)>,
    /// Output bindings in the child's port order; `None` when left open.
    pub outputs: Vec<(String, Option<String>)>,
    /// Width of every child port by name.
    pub port_widths: BTreeMap<String, u32>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElabModule {
    pub name: String,
    pub span: Span,
    pub ports: Vec<ElabPort>,
    pub nets: BTreeMap<String, Net>,
    pub assigns: Vec<ContAssign>,
    pub processes: Vec<Process>,
    pub instances: Vec<ElabInstance>,
    /// For each output port, the input ports it depends on combinationally.
    pub comb_deps: BTreeMap<String, BTreeSet<String>>,
}

impl ElaboratedDesign {
    pub fn module(&self, name: &str) -> Option<&ElabModule> {
        self.modules.iter().find(|m| m.name == name)
    }

    /// The last module that no other module instantiates.
    pub fn top(&self) -> Option<&str> {
        let used: BTreeSet<&str> =
            self.modules.iter().flat_map(|m| m.instances.iter().map(|i| i.module.as_str())).collect();
        self.modules.iter().rev().find(|m| !used.contains(m.name.as_str())).map(|m| m.name.as_str())
    }

    /// `name` and every module it transitively instantiates, children first.
    pub fn hierarchy(&self, name: &str) -> Vec<&ElabModule> {
        let mut wanted = BTreeSet::new();
        let mut stack = vec![name.to_string()];
        while let Some(n) = stack.pop() {
            if wanted.insert(n.clone()) {
                if let Some(m) = self.module(&n) {
                    stack.extend(m.instances.iter().map(|i| i.module.clone()));
                }
            }
        }
        self.modules.iter().filter(|m| wanted.contains(&m.name)).collect()
    }
}

impl ElabModule {
    pub fn inputs(&self) -> impl Iterator<Item = &ElabPort> {
        self.ports.iter().filter(|p| p.dir == Direction::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &ElabPort> {
        self.ports.iter().filter(|p| p.dir == Direction::Output)
    }

    pub fn is_sequential(&self, design: &ElaboratedDesign) -> bool {
        self.processes.iter().any(|p| matches!(p.kind, ProcessKind::Clocked { .. }))
            || self.instances.iter().any(|i| design.module(&i.module).is_some_and(|c| c.is_sequential(design)))
    }
}

/// Resolve, annotate and check a parsed design.
pub fn elaborate(ast: &HdlAst) -> Result<ElaboratedDesign, Vec<Diagnostic>> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    let mut by_name: BTreeMap<&str, &Module> = BTreeMap::new();
    for m in &ast.modules {
        if by_name.insert(&m.name, m).is_some() {
            errors.push(Diagnostic::error(Code::DupModule, format!("module {} defined twice", m.name)).at(m.span));
        }
    }

    // Children-first order; recursion is an error.
    let mut order: Vec<&str> = Vec::new();
    let mut state: BTreeMap<&str, u8> = BTreeMap::new();
    fn visit<'a>(
        name: &'a str,
        by_name: &BTreeMap<&'a str, &'a Module>,
        state: &mut BTreeMap<&'a str, u8>,
        order: &mut Vec<&'a str>,
        errors: &mut Vec<Diagnostic>,
    ) {
        match state.get(name) {
            Some(2) => return,
            Some(1) => {
                errors.push(Diagnostic::error(Code::RecursiveInstance, format!("module {name} instantiates itself")).at(by_name[name].span));
                return;
            }
            _ => {}
        }
        state.insert(name, 1);
        for item in &by_name[name].items {
            if let Item::Instance(inst) = item {
                if by_name.contains_key(inst.module.as_str()) {
                    visit(by_name.get_key_value(inst.module.as_str()).unwrap().0, by_name, state, order, errors);
                }
            }
        }
        state.insert(name, 2);
        order.push(name);
    }
    for m in &ast.modules {
        visit(&m.name, &by_name, &mut state, &mut order, &mut errors);
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let mut done: Vec<ElabModule> = Vec::new();
    for name in order {
        let module = by_name[name];
        let mut ctx = ModuleCtx { errors: Vec::new(), warnings: Vec::new(), params: BTreeMap::new(), nets: BTreeMap::new() };
        let em = ctx.module(module, &done);
        errors.append(&mut ctx.errors);
        warnings.append(&mut ctx.warnings);
        if let Some(em) = em {
            done.push(em);
        }
    }
    if errors.is_empty() {
        Ok(ElaboratedDesign { modules: done, warnings })
    } else {
        Err(errors)
    }
}

struct ModuleCtx {
    errors: Vec<Diagnostic>,
    warnings: Vec<Diagnostic>,
    params: BTreeMap<String, u64>,
    nets: BTreeMap<String, Net>,
}

impl ModuleCtx {
    fn err(&mut self, code: Code, msg: impl Into<String>, span: Span) {
        self.errors.push(Diagnostic::error(code, msg).at(span));
    }

    fn module(&mut self, m: &Module, done: &[ElabModule]) -> Option<ElabModule> {
        for p in &m.params {
            self.param(p);
        }
        let mut ports = Vec::new();
        for p in &m.ports {
            let (width, offset) = self.range(p.range.as_ref(), p.span);
            if self.declared(&p.name) {
                self.err(Code::DupDecl, format!("{} declared twice", p.name), p.span);
                continue;
            }
            let driver = if p.dir == Direction::Input { Driver::Input } else { Driver::None };
            if p.dir == Direction::Input && p.kind == NetKind::Reg {
                self.err(Code::DriverKind, format!("input {} cannot be a reg", p.name), p.span);
            }
            self.nets.insert(p.name.clone(), Net { width, offset, kind: p.kind, dir: Some(p.dir), driver, span: p.span });
            ports.push(ElabPort { name: p.name.clone(), dir: p.dir, width, span: p.span });
        }
        // Declarations first so that use-before-declaration within a module resolves.
        for item in &m.items {
            match item {
                Item::Param(p) => self.param(p),
                Item::Net(n) => {
                    let (width, offset) = self.range(n.range.as_ref(), n.span);
                    if self.declared(&n.name) {
                        self.err(Code::DupDecl, format!("{} declared twice", n.name), n.span);
                        continue;
                    }
                    self.nets.insert(n.name.clone(), Net { width, offset, kind: n.kind, dir: None, driver: Driver::None, span: n.span });
                }
                _ => {}
            }
        }

        let mut assigns = Vec::new();
        let mut processes = Vec::new();
        let mut instances = Vec::new();
        let mut instance_names = BTreeSet::new();
        for item in &m.items {
            match item {
                Item::Assign(a) => {
                    let expr = self.expr(&a.expr);
                    if let Some(net) = self.nets.get(&a.target).cloned() {
                        if net.kind == NetKind::Reg || net.dir == Some(Direction::Input) {
                            self.err(Code::DriverKind, format!("continuous assignment to {} which is not a driven wire", a.target), a.target_span);
                        }
                        self.set_driver(&a.target, Driver::Assign(assigns.len()), a.target_span);
                    } else {
                        self.undeclared(&a.target, a.target_span);
                    }
                    assigns.push(ContAssign { target: a.target.clone(), target_span: a.target_span, expr, span: a.span });
                }
                Item::Always(al) => {
                    let kind = match &al.sensitivity {
                        Sensitivity::Star => ProcessKind::Combinational,
                        Sensitivity::Posedge { clock, span } => {
                            match self.nets.get(clock) {
                                Some(n) if n.dir == Some(Direction::Input) && n.width == 1 => {}
                                Some(_) => self.err(Code::Clock, format!("clock {clock} must be a 1-bit module input"), *span),
                                None => self.undeclared(clock, *span),
                            }
                            ProcessKind::Clocked { clock: clock.clone() }
                        }
                    };
                    let clocked = matches!(kind, ProcessKind::Clocked { .. });
                    let body = self.stmt(&al.body, clocked);
                    let targets = body.targets();
                    let idx = processes.len();
                    for t in &targets {
                        let span = target_span(&body, t).unwrap_or(al.span);
                        match self.nets.get(t).cloned() {
                            Some(net) => {
                                if net.kind != NetKind::Reg {
                                    self.err(Code::DriverKind, format!("procedural assignment to {t} which is not a reg"), span);
                                }
                                self.set_driver(t, Driver::Process(idx), span);
                            }
                            None => self.undeclared(t, span),
                        }
                    }
                    if !clocked {
                        let defined = definitely_assigned(&body, &BTreeSet::new());
                        for t in &targets {
                            if !defined.contains(t) {
                                self.warnings.push(
                                    Diagnostic::warning(Code::Latch, format!("{t} is not assigned on every path of a combinational process"))
                                        .at(al.span),
                                );
                            }
                        }
                    }
                    processes.push(Process { kind, body, targets, span: al.span });
                }
                Item::Instance(inst) => {
                    if !instance_names.insert(inst.name.clone()) || self.declared(&inst.name) {
                        self.err(Code::DupDecl, format!("instance name {} declared twice", inst.name), inst.span);
                    }
                    if let Some(ei) = self.instance(inst, done, instances.len()) {
                        instances.push(ei);
                    }
                }
                Item::Net(_) | Item::Param(_) => {}
            }
        }

        // Undriven checks.
        let mut read: BTreeSet<String> = BTreeSet::new();
        for a in &assigns {
            read.extend(a.expr.reads().into_iter().map(String::from));
        }
        for p in &processes {
            p.body.walk(&mut |s| match &s.kind {
                StmtKind::Assign { expr, .. } => read.extend(expr.reads().into_iter().map(String::from)),
                StmtKind::If { cond, .. } => read.extend(cond.reads().into_iter().map(String::from)),
                StmtKind::Case { selector, .. } => read.extend(selector.reads().into_iter().map(String::from)),
                _ => {}
            });
        }
        for i in &instances {
            for (_, e) in &i.inputs {
                read.extend(e.reads().into_iter().map(String::from));
            }
        }
        for (name, net) in &self.nets.clone() {
            if net.driver == Driver::None && (read.contains(name) || net.dir == Some(Direction::Output)) {
                self.err(Code::Undriven, format!("{name} is never driven"), net.span);
            }
        }

        if !self.errors.is_empty() {
            return None;
        }

        let mut em = ElabModule {
            name: m.name.clone(),
            span: m.span,
            ports,
            nets: std::mem::take(&mut self.nets),
            assigns,
            processes,
            instances,
            comb_deps: BTreeMap::new(),
        };
        let edges = comb_edges(&em, done);
        if let Some(diag) = find_cycles(&edges) {
            self.errors.push(diag.at(m.span));
            return None;
        }
        em.comb_deps = summarize(&em, &edges);
        Some(em)
    }

    fn declared(&self, name: &str) -> bool {
        self.nets.contains_key(name) || self.params.contains_key(name)
    }

    fn undeclared(&mut self, name: &str, span: Span) {
        self.err(Code::Undeclared, format!("undeclared identifier {name}"), span);
    }

    fn set_driver(&mut self, name: &str, driver: Driver, span: Span) {
        let net = self.nets.get_mut(name).expect("checked by caller");
        if net.driver == driver {
            return;
        }
        if net.driver != Driver::None {
            self.errors.push(Diagnostic::error(Code::MultipleDrivers, format!("multiple drivers for {name}")).at(span));
            return;
        }
        net.driver = driver;
    }

    fn param(&mut self, p: &Param) {
        if self.declared(&p.name) {
            self.err(Code::DupDecl, format!("{} declared twice", p.name), p.span);
            return;
        }
        if let Some(v) = self.const_eval(&p.value) {
            self.params.insert(p.name.clone(), v);
        }
    }

    fn range(&mut self, range: Option<&Range>, span: Span) -> (u32, u32) {
        let Some(r) = range else { return (1, 0) };
        let (Some(msb), Some(lsb)) = (self.const_eval(&r.msb), self.const_eval(&r.lsb)) else {
            return (1, 0);
        };
        if msb < lsb {
            self.err(Code::Unsupported, "unsupported construct: ascending range", span);
            return (1, 0);
        }
        let width = msb - lsb + 1;
        if width > MAX_WIDTH as u64 {
            self.err(Code::WidthLimit, format!("width {width} exceeds {MAX_WIDTH}"), span);
            return (1, 0);
        }
        (width as u32, lsb as u32)
    }

    fn const_eval(&mut self, e: &Expr) -> Option<u64> {
        let v = match &e.kind {
            ExprKind::Literal { value, .. } => *value,
            ExprKind::Ident(n) => match self.params.get(n) {
                Some(v) => *v,
                None => {
                    if self.nets.contains_key(n) {
                        self.err(Code::NotConstant, format!("{n} is not a constant"), e.span);
                    } else {
                        self.undeclared(n, e.span);
                    }
                    return None;
                }
            },
            ExprKind::Binary(op, l, r) => {
                let (l, r) = (self.const_eval(l)?, self.const_eval(r)?);
                match op {
                    BinaryOp::Add => l.wrapping_add(r),
                    BinaryOp::Sub => l.wrapping_sub(r),
                    BinaryOp::Mul => l.wrapping_mul(r),
                    BinaryOp::Shl => l.checked_shl(r as u32).unwrap_or(0),
                    BinaryOp::Shr => l.checked_shr(r as u32).unwrap_or(0),
                    BinaryOp::BitAnd => l & r,
                    BinaryOp::BitOr => l | r,
                    BinaryOp::BitXor => l ^ r,
                    BinaryOp::LogAnd => (l != 0 && r != 0) as u64,
                    BinaryOp::LogOr => (l != 0 || r != 0) as u64,
                    BinaryOp::Eq => (l == r) as u64,
                    BinaryOp::Ne => (l != r) as u64,
                    BinaryOp::Lt => (l < r) as u64,
                    BinaryOp::Le => (l <= r) as u64,
                    BinaryOp::Gt => (l > r) as u64,
                    BinaryOp::Ge => (l >= r) as u64,
                }
            }
            ExprKind::Unary(UnaryOp::LogNot, x) => (self.const_eval(x)? == 0) as u64,
            ExprKind::Ternary(c, a, b) => {
                if self.const_eval(c)? != 0 {
                    self.const_eval(a)?
                } else {
                    self.const_eval(b)?
                }
            }
            _ => {
                self.err(Code::NotConstant, "expression is not a constant", e.span);
                return None;
            }
        };
        Some(v)
    }

    /// Annotate widths. Errors are recorded and a width-1 placeholder returned.
    fn expr(&mut self, e: &Expr) -> Expr {
        let span = e.span;
        let out = match &e.kind {
            ExprKind::Literal { width, value } => {
                let w = width.unwrap_or_else(|| min_width(*value));
                Expr::with_width(ExprKind::Literal { width: *width, value: *value }, span, w)
            }
            ExprKind::Ident(n) => {
                if let Some(v) = self.params.get(n) {
                    Expr::with_width(ExprKind::Literal { width: None, value: *v }, span, min_width(*v))
                } else if let Some(net) = self.nets.get(n) {
                    Expr::with_width(ExprKind::Ident(n.clone()), span, net.width)
                } else {
                    self.undeclared(n, span);
                    Expr::with_width(ExprKind::Ident(n.clone()), span, 1)
                }
            }
            ExprKind::Unary(op, x) => {
                let x = self.expr(x);
                let w = Opcode::from_unary(*op).result_width(&[x.width], None).unwrap_or(1);
                Expr::with_width(ExprKind::Unary(*op, Box::new(x)), span, w)
            }
            ExprKind::Binary(op, l, r) => {
                let l = self.expr(l);
                let r = if matches!(op, BinaryOp::Shl | BinaryOp::Shr) {
                    let amount = self.const_eval(r).unwrap_or(0);
                    Expr::with_width(ExprKind::Literal { width: None, value: amount }, r.span, min_width(amount))
                } else {
                    self.expr(r)
                };
                let w = match op {
                    BinaryOp::Shl | BinaryOp::Shr => l.width,
                    _ => Opcode::from_binary(*op).result_width(&[l.width, r.width], None).unwrap_or(1),
                };
                Expr::with_width(ExprKind::Binary(*op, Box::new(l), Box::new(r)), span, w)
            }
            ExprKind::Ternary(c, a, b) => {
                let (c, a, b) = (self.expr(c), self.expr(a), self.expr(b));
                let w = a.width.max(b.width);
                Expr::with_width(ExprKind::Ternary(Box::new(c), Box::new(a), Box::new(b)), span, w)
            }
            ExprKind::Concat(items) => {
                let items: Vec<Expr> = items.iter().map(|x| self.expr(x)).collect();
                let w: u32 = items.iter().map(|x| x.width).sum();
                if w > MAX_WIDTH {
                    self.err(Code::WidthLimit, format!("concatenation width {w} exceeds {MAX_WIDTH}"), span);
                }
                Expr::with_width(ExprKind::Concat(items), span, w.min(MAX_WIDTH))
            }
            ExprKind::Select { name, msb, lsb } => {
                let Some(net) = self.nets.get(name).cloned() else {
                    self.undeclared(name, span);
                    return Expr::with_width(ExprKind::Ident(name.clone()), span, 1);
                };
                let hi = self.const_eval(msb);
                let lo = match lsb {
                    Some(l) => self.const_eval(l),
                    None => hi,
                };
                let (Some(hi), Some(lo)) = (hi, lo) else {
                    return Expr::with_width(ExprKind::Ident(name.clone()), span, 1);
                };
                let top = net.offset as u64 + net.width as u64 - 1;
                if hi < lo || lo < net.offset as u64 || hi > top {
                    self.err(Code::Range, format!("select [{hi}:{lo}] outside {name}[{top}:{}]", net.offset), span);
                    return Expr::with_width(ExprKind::Ident(name.clone()), span, 1);
                }
                let base = Expr::with_width(ExprKind::Ident(name.clone()), span, net.width);
                let (msb, lsb) = ((hi - net.offset as u64) as u32, (lo - net.offset as u64) as u32);
                Expr::with_width(ExprKind::Slice { base: Box::new(base), msb, lsb }, span, msb - lsb + 1)
            }
            ExprKind::Slice { base, msb, lsb } => {
                let base = self.expr(base);
                Expr::with_width(ExprKind::Slice { base: Box::new(base), msb: *msb, lsb: *lsb }, span, msb - lsb + 1)
            }
        };
        if out.width == 0 {
            self.err(Code::WidthZero, "expression has zero width", span);
        }
        out
    }

    fn stmt(&mut self, s: &Stmt, clocked: bool) -> Stmt {
        let kind = match &s.kind {
            StmtKind::Empty => StmtKind::Empty,
            StmtKind::Block(items) => StmtKind::Block(items.iter().map(|x| self.stmt(x, clocked)).collect()),
            StmtKind::If { cond, then, els } => StmtKind::If {
                cond: self.expr(cond),
                then: Box::new(self.stmt(then, clocked)),
                els: els.as_ref().map(|e| Box::new(self.stmt(e, clocked))),
            },
            StmtKind::Case { selector, items, default } => {
                let selector = self.expr(selector);
                let items = items
                    .iter()
                    .map(|it| CaseItem {
                        labels: it
                            .labels
                            .iter()
                            .map(|l| {
                                let v = self.const_eval(l).unwrap_or(0);
                                Expr::with_width(ExprKind::Literal { width: None, value: v }, l.span, min_width(v))
                            })
                            .collect(),
                        body: self.stmt(&it.body, clocked),
                        span: it.span,
                    })
                    .collect();
                StmtKind::Case { selector, items, default: default.as_ref().map(|d| Box::new(self.stmt(d, clocked))) }
            }
            StmtKind::Assign { target, target_span, blocking, expr } => {
                if clocked && *blocking {
                    self.err(Code::AssignKind, format!("blocking assignment to {target} in a clocked process"), s.span);
                }
                if !clocked && !*blocking {
                    self.err(Code::AssignKind, format!("nonblocking assignment to {target} in a combinational process"), s.span);
                }
                StmtKind::Assign { target: target.clone(), target_span: *target_span, blocking: *blocking, expr: self.expr(expr) }
            }
        };
        Stmt { kind, span: s.span }
    }

    fn instance(&mut self, inst: &Instance, done: &[ElabModule], idx: usize) -> Option<ElabInstance> {
        let Some(child) = done.iter().find(|m| m.name == inst.module) else {
            self.err(Code::UnknownModule, format!("unknown module {}", inst.module), inst.span);
            return None;
        };
        let mut seen = BTreeSet::new();
        for b in &inst.bindings {
            if !child.ports.iter().any(|p| p.name == b.port) {
                self.err(Code::PortBinding, format!("{} has no port {}", child.name, b.port), b.span);
            }
            if !seen.insert(b.port.clone()) {
                self.err(Code::PortBinding, format!("port {} bound twice", b.port), b.span);
            }
        }
        let find = |name: &str| inst.bindings.iter().find(|b| b.port == name);
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for p in &child.ports {
            match p.dir {
                Direction::Input => match find(&p.name).and_then(|b| b.expr.as_ref()) {
                    Some(e) => {
                        let e = self.expr(e);
                        inputs.push((p.name.clone(), e));
                    }
                    None => self.err(Code::PortBinding, format!("input {} of {} is unconnected", p.name, inst.name), inst.span),
                },
                Direction::Output => match find(&p.name).and_then(|b| b.expr.as_ref().map(|e| (b, e))) {
                    Some((b, e)) => match &e.kind {
                        ExprKind::Ident(n) => match self.nets.get(n).cloned() {
                            Some(net) => {
                                if net.kind == NetKind::Reg || net.dir == Some(Direction::Input) {
                                    self.err(Code::DriverKind, format!("instance output drives {n} which is not a wire"), b.span);
                                }
                                if net.width != p.width {
                                    self.err(Code::PortBinding, format!("{n} is {} bits but {}.{} is {} bits", net.width, child.name, p.name, p.width), b.span);
                                }
                                self.set_driver(n, Driver::Instance(idx), b.span);
                                outputs.push((p.name.clone(), Some(n.clone())));
                            }
                            None => self.undeclared(n, e.span),
                        },
                        _ => self.err(Code::Unsupported, "unsupported construct: output binding must be a net name", b.span),
                    },
                    None => outputs.push((p.name.clone(), None)),
                },
            }
        }
        let port_widths = child.ports.iter().map(|p| (p.name.clone(), p.width)).collect();
        Some(ElabInstance { module: inst.module.clone(), name: inst.name.clone(), inputs, outputs, port_widths, span: inst.span })
    }
}

fn target_span(body: &Stmt, target: &str) -> Option<Span> {
    let mut found = None;
    body.walk(&mut |s| {
        if let StmtKind::Assign { target: t, target_span, .. } = &s.kind {
            if t == target && found.is_none() {
                found = Some(*target_span);
            }
        }
    });
    found
}

/// Whether a case with these labels covers every value of a `width`-bit selector.
pub fn case_is_full(labels: impl IntoIterator<Item = u64>, width: u32) -> bool {
    if width >= 16 {
        return false;
    }
    let distinct: BTreeSet<u64> = labels.into_iter().filter(|v| *v < (1u64 << width)).collect();
    distinct.len() as u64 == 1u64 << width
}

/// Targets assigned on every path through `s`, given those assigned before it.
pub fn definitely_assigned(s: &Stmt, before: &BTreeSet<String>) -> BTreeSet<String> {
    match &s.kind {
        StmtKind::Empty => before.clone(),
        StmtKind::Assign { target, .. } => {
            let mut out = before.clone();
            out.insert(target.clone());
            out
        }
        StmtKind::Block(items) => items.iter().fold(before.clone(), |acc, x| definitely_assigned(x, &acc)),
        StmtKind::If { then, els, .. } => {
            let t = definitely_assigned(then, before);
            let e = match els {
                Some(e) => definitely_assigned(e, before),
                None => before.clone(),
            };
            t.intersection(&e).cloned().collect()
        }
        StmtKind::Case { selector, items, default } => {
            let mut arms: Vec<BTreeSet<String>> = items.iter().map(|i| definitely_assigned(&i.body, before)).collect();
            let full = case_is_full(items.iter().flat_map(|i| i.labels.iter().map(literal_value)), selector.width);
            match default {
                Some(d) => arms.push(definitely_assigned(d, before)),
                None if !full => arms.push(before.clone()),
                None => {}
            }
            let mut it = arms.into_iter();
            let first = it.next().unwrap_or_else(|| before.clone());
            it.fold(first, |acc, x| acc.intersection(&x).cloned().collect())
        }
    }
}

pub fn literal_value(e: &Expr) -> u64 {
    match e.kind {
        ExprKind::Literal { value, .. } => value,
        _ => 0,
    }
}

/// Combinational dependency edges `from -> to` between nets of one module.
fn comb_edges(m: &ElabModule, done: &[ElabModule]) -> Vec<(String, String)> {
    let mut edges = Vec::new();
    for a in &m.assigns {
        for r in a.expr.reads() {
            edges.push((r.to_string(), a.target.clone()));
        }
    }
    for p in &m.processes {
        if p.kind != ProcessKind::Combinational {
            continue;
        }
        let mut env: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        deps_stmt(&p.body, &BTreeSet::new(), &mut env);
        for (t, deps) in env {
            for d in deps {
                edges.push((d, t.clone()));
            }
        }
    }
    for inst in &m.instances {
        let Some(child) = done.iter().find(|c| c.name == inst.module) else { continue };
        for (port, net) in &inst.outputs {
            let Some(net) = net else { continue };
            for dep in child.comb_deps.get(port).into_iter().flatten() {
                if let Some((_, e)) = inst.inputs.iter().find(|(p, _)| p == dep) {
                    for r in e.reads() {
                        edges.push((r.to_string(), net.clone()));
                    }
                }
            }
        }
    }
    edges
}

fn expr_deps(e: &Expr, env: &BTreeMap<String, BTreeSet<String>>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for r in e.reads() {
        match env.get(r) {
            Some(d) => out.extend(d.iter().cloned()),
            None => {
                out.insert(r.to_string());
            }
        }
    }
    out
}

fn deps_stmt(s: &Stmt, ctrl: &BTreeSet<String>, env: &mut BTreeMap<String, BTreeSet<String>>) {
    match &s.kind {
        StmtKind::Empty => {}
        StmtKind::Block(items) => items.iter().for_each(|x| deps_stmt(x, ctrl, env)),
        StmtKind::Assign { target, expr, .. } => {
            let mut d = expr_deps(expr, env);
            d.extend(ctrl.iter().cloned());
            env.insert(target.clone(), d);
        }
        StmtKind::If { cond, then, els } => {
            let mut c = ctrl.clone();
            c.extend(expr_deps(cond, env));
            let mut arms = vec![env.clone()];
            deps_stmt(then, &c, &mut arms[0]);
            let mut e = env.clone();
            if let Some(x) = els {
                deps_stmt(x, &c, &mut e);
            }
            arms.push(e);
            merge_arms(env, arms);
        }
        StmtKind::Case { selector, items, default } => {
            let mut c = ctrl.clone();
            c.extend(expr_deps(selector, env));
            let mut arms = Vec::new();
            for it in items {
                let mut a = env.clone();
                deps_stmt(&it.body, &c, &mut a);
                arms.push(a);
            }
            let mut d = env.clone();
            if let Some(x) = default {
                deps_stmt(x, &c, &mut d);
            }
            arms.push(d);
            merge_arms(env, arms);
        }
    }
}

fn merge_arms(env: &mut BTreeMap<String, BTreeSet<String>>, arms: Vec<BTreeMap<String, BTreeSet<String>>>) {
    for arm in arms {
        for (k, v) in arm {
            env.entry(k).or_default().extend(v);
        }
    }
}

fn find_cycles(edges: &[(String, String)]) -> Option<Diagnostic> {
    let mut g: DiGraph<String, ()> = DiGraph::new();
    let mut idx: BTreeMap<&str, NodeIndex> = BTreeMap::new();
    for (a, b) in edges {
        for n in [a, b] {
            if !idx.contains_key(n.as_str()) {
                idx.insert(n, g.add_node(n.clone()));
            }
        }
        g.add_edge(idx[a.as_str()], idx[b.as_str()], ());
    }
    let mut cycles: Vec<Vec<String>> = tarjan_scc(&g)
        .into_iter()
        .filter(|scc| scc.len() > 1 || g.contains_edge(scc[0], scc[0]))
        .map(|scc| {
            let mut names: Vec<String> = scc.iter().map(|i| g[*i].clone()).collect();
            names.sort();
            names
        })
        .collect();
    cycles.sort();
    let first = cycles.first()?;
    Some(Diagnostic {
        severity: Severity::Error,
        code: Code::CombCycle,
        message: format!("combinational cycle through {{{}}}", first.join(", ")),
        span: None,
    })
}

fn summarize(m: &ElabModule, edges: &[(String, String)]) -> BTreeMap<String, BTreeSet<String>> {
    let mut preds: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in edges {
        preds.entry(b.as_str()).or_default().push(a.as_str());
    }
    let mut out = BTreeMap::new();
    for port in m.outputs() {
        let mut seen = BTreeSet::new();
        let mut stack = vec![port.name.as_str()];
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(preds.get(n).into_iter().flatten().copied());
            }
        }
        let deps = m.inputs().filter(|p| seen.contains(p.name.as_str())).map(|p| p.name.clone()).collect();
        out.insert(port.name.clone(), deps);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::parser::parse_source;

    fn elab(src: &str) -> Result<ElaboratedDesign, Vec<Diagnostic>> {
        elaborate(&parse_source(src).unwrap())
    }

    fn codes(src: &str) -> Vec<Code> {
        elab(src).unwrap_err().into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn and_gate_width() {
        let d = elab("module m(input a, input b, output y); assign y = a & b; endmodule").unwrap();
        let m = &d.modules[0];
        assert_eq!(m.assigns[0].expr.width, 1);
        assert_eq!(m.nets["y"].driver, Driver::Assign(0));
    }

    #[test]
    fn multiple_drivers() {
        let c = codes("module m(input a, input b, output y); assign y = a; assign y = b; endmodule");
        assert_eq!(c, vec![Code::MultipleDrivers]);
    }

    #[test]
    fn two_net_cycle() {
        let err = elab("module m(output y); wire a, b; assign a = b; assign b = a; assign y = a; endmodule").unwrap_err();
        assert_eq!(err.len(), 1);
        assert_eq!(err[0].code, Code::CombCycle);
        assert!(err[0].message.contains("{a, b}"), "{}", err[0].message);
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let c = codes("module m(output y); wire a; assign a = ~a; assign y = a; endmodule");
        assert_eq!(c, vec![Code::CombCycle]);
    }

    #[test]
    fn register_breaks_cycle() {
        elab("module m(input clk, output [1:0] q); reg [1:0] r; always @(posedge clk) r <= r + 1; assign q = r; endmodule").unwrap();
    }

    #[test]
    fn independent_targets_do_not_form_false_cycle() {
        elab(
            "module m(input b, output y); reg x, z; wire a;\n\
             always @(*) begin x = a; z = b; end\n assign a = z; assign y = x; endmodule",
        )
        .unwrap();
    }

    #[test]
    fn width_rules() {
        let d = elab(
            "module m(input [3:0] a, input [1:0] b, output [5:0] y, output e, output [7:0] c);\n\
             assign y = a + b; assign e = a == b; assign c = {a, b, 2'b01}; endmodule",
        )
        .unwrap();
        let m = &d.modules[0];
        assert_eq!(m.assigns[0].expr.width, 4);
        assert_eq!(m.assigns[1].expr.width, 1);
        assert_eq!(m.assigns[2].expr.width, 8);
    }

    #[test]
    fn every_expression_has_width() {
        let d = elab(
            "module m #(parameter W = 4) (input [W-1:0] a, input s, output [W-1:0] y);\n\
             localparam K = 3; assign y = s ? (a << 1) ^ K : {a[2:0], a[W-1]}; endmodule",
        )
        .unwrap();
        let mut n = 0;
        d.modules[0].assigns[0].expr.walk(&mut |e| {
            assert!(e.width >= 1, "{e:?}");
            n += 1;
        });
        assert!(n > 5);
    }

    #[test]
    fn undeclared_and_undriven() {
        assert_eq!(codes("module m(output y); assign y = q; endmodule"), vec![Code::Undeclared]);
        assert_eq!(codes("module m(input a, output y); endmodule"), vec![Code::Undriven]);
    }

    #[test]
    fn assignment_kinds() {
        let c = codes("module m(input clk, input d, output reg q); always @(posedge clk) q = d; endmodule");
        assert_eq!(c, vec![Code::AssignKind]);
        let c = codes("module m(input d, output reg q); always @(*) q <= d; endmodule");
        assert_eq!(c, vec![Code::AssignKind]);
        let c = codes("module m(input d, output q); always @(*) q = d; endmodule");
        assert_eq!(c, vec![Code::DriverKind]);
    }

    #[test]
    fn latch_warning() {
        let d = elab("module m(input c, input d, output reg q); always @(*) if (c) q = d; endmodule").unwrap();
        assert_eq!(d.warnings.len(), 1);
        assert_eq!(d.warnings[0].code, Code::Latch);
        let d = elab(
            "module m(input [1:0] s, input d, output reg q);\n\
             always @(*) case (s) 0: q = d; 1: q = 0; 2: q = 1; 3: q = ~d; endcase endmodule",
        )
        .unwrap();
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn clock_must_be_input() {
        let c = codes("module m(input d, output reg q); wire k; assign k = d; always @(posedge k) q <= d; endmodule");
        assert_eq!(c, vec![Code::Clock]);
    }

    #[test]
    fn hierarchy_and_summaries() {
        let d = elab(
            "module top(input clk, input a, output y, output z);\n child u (.clk(clk), .d(a), .q(y), .p(z)); endmodule\n\
             module child(input clk, input d, output q, output p); reg r; always @(posedge clk) r <= d;\n\
             assign q = r; assign p = ~d; endmodule",
        )
        .unwrap();
        assert_eq!(d.modules[0].name, "child");
        assert_eq!(d.top(), Some("top"));
        let child = d.module("child").unwrap();
        assert!(child.comb_deps["q"].is_empty());
        assert_eq!(child.comb_deps["p"].iter().collect::<Vec<_>>(), vec!["d"]);
    }

    #[test]
    fn feedback_through_child_register_is_not_a_cycle() {
        elab(
            "module top(input clk, output y); wire w; child u (.clk(clk), .d(~w), .q(w)); assign y = w; endmodule\n\
             module child(input clk, input d, output q); reg r; always @(posedge clk) r <= d; assign q = r; endmodule",
        )
        .unwrap();
        let c = codes(
            "module top(output y); wire w; inv u (.d(w), .q(w)); assign y = w; endmodule\n\
             module inv(input d, output q); assign q = ~d; endmodule",
        );
        assert_eq!(c, vec![Code::CombCycle]);
    }

    #[test]
    fn unknown_module_and_bindings() {
        assert_eq!(codes("module top(input a); nope u (.x(a)); endmodule"), vec![Code::UnknownModule]);
        let c = codes("module top(input a); c u (.zz(a)); endmodule module c(input x); endmodule");
        assert!(c.contains(&Code::PortBinding));
        assert_eq!(codes("module a; a u (); endmodule"), vec![Code::RecursiveInstance]);
    }

    #[test]
    fn selects_are_checked() {
        assert_eq!(codes("module m(input [3:0] a, output y); assign y = a[4]; endmodule"), vec![Code::Range]);
        let d = elab("module m(input [7:4] a, output [1:0] y); assign y = a[6:5]; endmodule").unwrap();
        let ExprKind::Slice { msb, lsb, .. } = d.modules[0].assigns[0].expr.kind else { panic!() };
        assert_eq!((msb, lsb), (2, 1));
    }
}
