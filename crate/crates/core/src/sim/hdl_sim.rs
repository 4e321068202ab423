//! Reference simulator that runs the elaborated HDL directly, without going
//! through the chart document.

use std::collections::BTreeMap;

use super::{Model, Stimulus, Trace};
use crate::diag::{Code, Diagnostic};
use crate::hdl::ast::{Direction, Expr, ExprKind, Stmt, StmtKind};
use crate::hdl::elab::{literal_value, Driver, ElabModule, ElaboratedDesign, ProcessKind};
use crate::ops::{eval, mask, slice_param, Opcode};

#[derive(Debug, Clone)]
enum CExpr {
    Net(usize),
    Const(u64),
    Op { op: Opcode, param: u64, args: Vec<(CExpr, u32)>, width: u32 },
    Ternary(Box<CExpr>, Box<CExpr>, Box<CExpr>),
}

#[derive(Debug, Clone)]
enum CStmt {
    Block(Vec<CStmt>),
    If(CExpr, Box<CStmt>, Option<Box<CStmt>>),
    Case(CExpr, Vec<(Vec<u64>, CStmt)>, Option<Box<CStmt>>),
    Assign(usize, CExpr),
    Empty,
}

#[derive(Debug, Clone)]
enum CDriver {
    Input,
    Assign(CExpr),
    Process(usize),
    Instance(usize, usize),
    None,
}

#[derive(Debug, Clone)]
struct CProcess {
    clock: Option<usize>,
    body: CStmt,
    targets: Vec<usize>,
}

#[derive(Debug, Clone)]
struct CInstance {
    module: usize,
    /// Child input net index to the bound expression in the parent.
    bindings: BTreeMap<usize, CExpr>,
}

#[derive(Debug, Clone)]
struct CModule {
    widths: Vec<u32>,
    drivers: Vec<CDriver>,
    processes: Vec<CProcess>,
    instances: Vec<CInstance>,
}

/// One node of the instance tree.
#[derive(Debug, Clone)]
struct Inst {
    module: usize,
    parent: Option<(usize, usize)>,
    children: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct HdlModel {
    modules: Vec<CModule>,
    insts: Vec<Inst>,
    inputs: Vec<(String, u32)>,
    outputs: Vec<(String, u32)>,
    /// Net indices of the top module's inputs and outputs.
    input_nets: Vec<usize>,
    output_nets: Vec<usize>,
}

struct Compiler<'a> {
    m: &'a ElabModule,
    index: BTreeMap<&'a str, usize>,
}

impl Compiler<'_> {
    fn net(&self, name: &str) -> usize {
        self.index[name]
    }

    fn expr(&self, e: &Expr) -> CExpr {
        let w = e.width;
        match &e.kind {
            ExprKind::Ident(n) => CExpr::Net(self.net(n)),
            ExprKind::Literal { value, .. } => CExpr::Const(value & mask(w)),
            ExprKind::Unary(op, x) => {
                CExpr::Op { op: Opcode::from_unary(*op), param: 0, args: vec![(self.expr(x), x.width)], width: w }
            }
            ExprKind::Binary(op, l, r) => {
                let op = Opcode::from_binary(*op);
                if matches!(op, Opcode::Shl | Opcode::Shr) {
                    CExpr::Op { op, param: literal_value(r), args: vec![(self.expr(l), l.width)], width: w }
                } else {
                    CExpr::Op { op, param: 0, args: vec![(self.expr(l), l.width), (self.expr(r), r.width)], width: w }
                }
            }
            ExprKind::Ternary(c, a, b) => {
                CExpr::Ternary(Box::new(self.expr(c)), Box::new(self.expr(a)), Box::new(self.expr(b)))
            }
            ExprKind::Concat(items) => CExpr::Op {
                op: Opcode::Concat,
                param: 0,
                args: items.iter().map(|x| (self.expr(x), x.width)).collect(),
                width: w,
            },
            ExprKind::Slice { base, msb, lsb } => CExpr::Op {
                op: Opcode::Slice,
                param: slice_param(*msb, *lsb),
                args: vec![(self.expr(base), base.width)],
                width: w,
            },
            ExprKind::Select { .. } => unreachable!("selects are resolved during elaboration"),
        }
    }

    fn stmt(&self, s: &Stmt) -> CStmt {
        match &s.kind {
            StmtKind::Block(items) => CStmt::Block(items.iter().map(|x| self.stmt(x)).collect()),
            StmtKind::If { cond, then, els } => {
                CStmt::If(self.expr(cond), Box::new(self.stmt(then)), els.as_ref().map(|e| Box::new(self.stmt(e))))
            }
            StmtKind::Case { selector, items, default } => CStmt::Case(
                self.expr(selector),
                items.iter().map(|i| (i.labels.iter().map(literal_value).collect(), self.stmt(&i.body))).collect(),
                default.as_ref().map(|d| Box::new(self.stmt(d))),
            ),
            StmtKind::Assign { target, expr, .. } => CStmt::Assign(self.net(target), self.expr(expr)),
            StmtKind::Empty => CStmt::Empty,
        }
    }
}

fn compile(m: &ElabModule, module_index: &BTreeMap<&str, usize>, design: &ElaboratedDesign) -> CModule {
    let names: Vec<&str> = m.nets.keys().map(String::as_str).collect();
    let c = Compiler { m, index: names.iter().enumerate().map(|(i, n)| (*n, i)).collect() };
    let instances: Vec<CInstance> = c
        .m
        .instances
        .iter()
        .map(|inst| {
            let child = &design.modules[module_index[inst.module.as_str()]];
            let child_names: BTreeMap<&str, usize> = child.nets.keys().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
            CInstance {
                module: module_index[inst.module.as_str()],
                bindings: inst.inputs.iter().map(|(p, e)| (child_names[p.as_str()], c.expr(e))).collect(),
            }
        })
        .collect();
    let drivers = m
        .nets
        .iter()
        .map(|(name, net)| match net.driver {
            Driver::Input => CDriver::Input,
            Driver::Assign(i) => CDriver::Assign(c.expr(&m.assigns[i].expr)),
            Driver::Process(i) => CDriver::Process(i),
            Driver::Instance(i) => {
                let inst = &m.instances[i];
                let port = inst.outputs.iter().find(|(_, n)| n.as_deref() == Some(name.as_str())).map(|(p, _)| p.as_str());
                let child = &design.modules[module_index[inst.module.as_str()]];
                match port.and_then(|p| child.nets.keys().position(|n| n == p)) {
                    Some(j) => CDriver::Instance(i, j),
                    None => CDriver::None,
                }
            }
            Driver::None => CDriver::None,
        })
        .collect();
    let processes = m
        .processes
        .iter()
        .map(|p| CProcess {
            clock: match &p.kind {
                ProcessKind::Clocked { clock } => Some(c.net(clock)),
                ProcessKind::Combinational => None,
            },
            body: c.stmt(&p.body),
            targets: p.targets.iter().map(|t| c.net(t)).collect(),
        })
        .collect();
    CModule { widths: m.nets.values().map(|n| n.width).collect(), drivers, processes, instances }
}

impl HdlModel {
    pub fn new(design: &ElaboratedDesign, top: &str) -> Result<Self, Diagnostic> {
        let module_index: BTreeMap<&str, usize> =
            design.modules.iter().enumerate().map(|(i, m)| (m.name.as_str(), i)).collect();
        let &top_idx = module_index
            .get(top)
            .ok_or_else(|| Diagnostic::error(Code::UnknownModule, format!("unknown module {top}")))?;
        let modules: Vec<CModule> = design.modules.iter().map(|m| compile(m, &module_index, design)).collect();

        let mut insts = vec![Inst { module: top_idx, parent: None, children: Vec::new() }];
        let mut i = 0;
        while i < insts.len() {
            let module = insts[i].module;
            for (k, ci) in modules[module].instances.iter().enumerate() {
                if insts.len() > 100_000 {
                    return Err(Diagnostic::error(Code::RecursiveInstance, "instance tree too large"));
                }
                insts.push(Inst { module: ci.module, parent: Some((i, k)), children: Vec::new() });
                let n = insts.len() - 1;
                insts[i].children.push(n);
            }
            i += 1;
        }

        let m = &design.modules[top_idx];
        let pos = |name: &str| m.nets.keys().position(|n| n == name).unwrap_or(0);
        let inputs: Vec<(String, u32)> = m.inputs().map(|p| (p.name.clone(), p.width)).collect();
        let outputs: Vec<(String, u32)> = m.outputs().map(|p| (p.name.clone(), p.width)).collect();
        debug_assert!(m.ports.iter().all(|p| matches!(p.dir, Direction::Input | Direction::Output)));
        Ok(Self {
            input_nets: inputs.iter().map(|(n, _)| pos(n)).collect(),
            output_nets: outputs.iter().map(|(n, _)| pos(n)).collect(),
            modules,
            insts,
            inputs,
            outputs,
        })
    }
}

/// Net values of one cycle, computed on demand.
struct Cycle<'a> {
    model: &'a HdlModel,
    top_inputs: Vec<u64>,
    state: &'a [Vec<u64>],
    memo: Vec<Vec<Option<u64>>>,
}

impl Cycle<'_> {
    fn net(&mut self, inst: usize, net: usize) -> u64 {
        if let Some(v) = self.memo[inst][net] {
            return v;
        }
        let model = self.model;
        let module = &model.modules[model.insts[inst].module];
        let v = match &module.drivers[net] {
            CDriver::Input => match model.insts[inst].parent {
                None => model.input_nets.iter().position(|n| *n == net).map(|k| self.top_inputs[k]).unwrap_or(0),
                Some((parent, k)) => {
                    let pm = &model.modules[model.insts[parent].module];
                    match pm.instances[k].bindings.get(&net) {
                        Some(e) => self.expr(parent, e, None),
                        None => 0,
                    }
                }
            },
            CDriver::Assign(e) => self.expr(inst, e, None),
            CDriver::Process(p) => {
                let p = &module.processes[*p];
                if p.clock.is_some() {
                    self.state[inst][net]
                } else {
                    // Blocking semantics; targets start from their previous value.
                    let mut env: BTreeMap<usize, u64> = p.targets.iter().map(|t| (*t, self.state[inst][*t])).collect();
                    self.exec(inst, &p.body, &mut env, true);
                    for (t, v) in &env {
                        self.memo[inst][*t] = Some(*v);
                    }
                    env.get(&net).copied().unwrap_or(0)
                }
            }
            CDriver::Instance(k, child_net) => {
                let child = model.insts[inst].children[*k];
                self.net(child, *child_net)
            }
            CDriver::None => 0,
        };
        let v = v & mask(module.widths[net]);
        self.memo[inst][net] = Some(v);
        v
    }

    fn expr(&mut self, inst: usize, e: &CExpr, env: Option<&BTreeMap<usize, u64>>) -> u64 {
        match e {
            CExpr::Net(n) => match env.and_then(|m| m.get(n)) {
                Some(v) => *v,
                None => self.net(inst, *n),
            },
            CExpr::Const(v) => *v,
            CExpr::Op { op, param, args, width } => {
                let vals: Vec<(u64, u32)> = args.iter().map(|(a, w)| (self.expr(inst, a, env), *w)).collect();
                eval(*op, &vals, *width, *param)
            }
            CExpr::Ternary(c, a, b) => {
                if self.expr(inst, c, env) != 0 {
                    self.expr(inst, a, env)
                } else {
                    self.expr(inst, b, env)
                }
            }
        }
    }

    /// Run a statement. With `blocking`, reads see earlier writes in `env`.
    fn exec(&mut self, inst: usize, s: &CStmt, env: &mut BTreeMap<usize, u64>, blocking: bool) {
        match s {
            CStmt::Block(items) => {
                for x in items {
                    self.exec(inst, x, env, blocking);
                }
            }
            CStmt::If(c, t, e) => {
                if self.expr(inst, c, blocking.then_some(&*env)) != 0 {
                    self.exec(inst, t, env, blocking);
                } else if let Some(e) = e {
                    self.exec(inst, e, env, blocking);
                }
            }
            CStmt::Case(sel, items, default) => {
                let v = self.expr(inst, sel, blocking.then_some(&*env));
                match items.iter().find(|(labels, _)| labels.contains(&v)) {
                    Some((_, body)) => self.exec(inst, body, env, blocking),
                    None => {
                        if let Some(d) = default {
                            self.exec(inst, d, env, blocking);
                        }
                    }
                }
            }
            CStmt::Assign(t, e) => {
                let w = self.model.modules[self.model.insts[inst].module].widths[*t];
                let v = self.expr(inst, e, blocking.then_some(&*env)) & mask(w);
                env.insert(*t, v);
            }
            CStmt::Empty => {}
        }
    }
}

impl Model for HdlModel {
    fn inputs(&self) -> &[(String, u32)] {
        &self.inputs
    }

    fn outputs(&self) -> &[(String, u32)] {
        &self.outputs
    }

    fn is_sequential(&self) -> bool {
        self.insts.iter().any(|i| self.modules[i.module].processes.iter().any(|p| p.clock.is_some()))
    }

    fn run_unchecked(&self, stim: &Stimulus) -> Trace {
        let mut state: Vec<Vec<u64>> = self.insts.iter().map(|i| vec![0; self.modules[i.module].widths.len()]).collect();
        let mut trace = Vec::with_capacity(stim.cycles.len());
        for vector in &stim.cycles {
            let mut cy = Cycle {
                model: self,
                top_inputs: self.inputs.iter().map(|(n, w)| vector[n] & mask(*w)).collect(),
                state: &state,
                memo: state.iter().map(|s| vec![None; s.len()]).collect(),
            };
            let sample = self.output_nets.iter().map(|n| cy.net(0, *n)).collect::<Vec<_>>();
            trace.push(self.outputs.iter().zip(sample).map(|((n, _), v)| (n.clone(), v)).collect());

            // Clocked processes see this cycle's values; writes commit together.
            let mut updates = Vec::new();
            for (i, inst) in self.insts.iter().enumerate() {
                for p in &self.modules[inst.module].processes {
                    let Some(clock) = p.clock else { continue };
                    if cy.net(i, clock) == 0 {
                        continue;
                    }
                    let mut env = BTreeMap::new();
                    cy.exec(i, &p.body, &mut env, false);
                    updates.extend(env.into_iter().map(|(t, v)| (i, t, v)));
                }
            }
            // Combinational targets keep their value across cycles (latches).
            let mut latched = Vec::new();
            for (i, inst) in self.insts.iter().enumerate() {
                for p in &self.modules[inst.module].processes {
                    if p.clock.is_none() {
                        for t in &p.targets {
                            if let Some(v) = cy.memo[i][*t] {
                                latched.push((i, *t, v));
                            }
                        }
                    }
                }
            }
            for (i, t, v) in updates.into_iter().chain(latched) {
                state[i][t] = v;
            }
        }
        trace
    }
}
