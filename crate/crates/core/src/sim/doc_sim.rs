use std::collections::BTreeMap;

use super::{Model, Stimulus, Trace};
use crate::diag::{Code, Diagnostic};
use crate::ir::{CcrsDocument, PortDirection, StnKind};
use crate::ops::{eval, slice_param, Opcode};

type Sig = usize;

#[derive(Debug, Clone)]
enum Cell {
    Input(usize),
    Const(u64),
    Op { op: Opcode, param: u64, ins: Vec<(Sig, u32)>, width: u32 },
    Branch { rows: Vec<(Option<Sig>, Sig)> },
    Case { sel: Sig, rows: Vec<(Option<Vec<u64>>, Sig)> },
    Reg { d: Sig, clock: Sig },
    Alias(Sig),
    Zero,
}

impl Cell {
    fn deps(&self) -> Vec<Sig> {
        match self {
            Cell::Input(_) | Cell::Const(_) | Cell::Reg { .. } | Cell::Zero => Vec::new(),
            Cell::Op { ins, .. } => ins.iter().map(|(s, _)| *s).collect(),
            Cell::Branch { rows } => rows.iter().flat_map(|(c, v)| c.iter().copied().chain([*v])).collect(),
            Cell::Case { sel, rows } => std::iter::once(*sel).chain(rows.iter().map(|(_, v)| *v)).collect(),
            Cell::Alias(s) => vec![*s],
        }
    }
}

/// A document flattened through its instances into one evaluation network.
#[derive(Debug, Clone)]
pub struct DocModel {
    inputs: Vec<(String, u32)>,
    outputs: Vec<(String, u32)>,
    cells: Vec<Cell>,
    order: Vec<usize>,
    output_sigs: Vec<Sig>,
    regs: Vec<usize>,
}

impl DocModel {
    /// Compile a document. Expects a document that validates.
    pub fn new(doc: &CcrsDocument) -> Result<Self, Diagnostic> {
        let inputs: Vec<(String, u32)> =
            doc.ports.iter().filter(|p| p.direction == PortDirection::Input).map(|p| (p.name.clone(), p.width)).collect();
        let outputs: Vec<(String, u32)> =
            doc.ports.iter().filter(|p| p.direction == PortDirection::Output).map(|p| (p.name.clone(), p.width)).collect();
        let mut b = Builder { cells: Vec::new(), lib: &doc.metadata.submodules };
        let top_inputs: BTreeMap<String, Sig> = inputs
            .iter()
            .enumerate()
            .map(|(i, (n, _))| {
                b.cells.push(Cell::Input(i));
                (n.clone(), b.cells.len() - 1)
            })
            .collect();
        let outs = b.flatten(doc, &top_inputs, 0)?;
        let output_sigs = outputs.iter().map(|(n, _)| outs[n]).collect();
        let cells = b.cells;
        let order = topo_order(&cells)?;
        let regs = cells.iter().enumerate().filter(|(_, c)| matches!(c, Cell::Reg { .. })).map(|(i, _)| i).collect();
        Ok(Self { inputs, outputs, cells, order, output_sigs, regs })
    }
}

struct Builder<'a> {
    cells: Vec<Cell>,
    lib: &'a [CcrsDocument],
}

impl Builder<'_> {
    /// Add the cells of `doc`, with its input ports bound to `inputs`.
    /// Returns the signal driving each output port.
    fn flatten(&mut self, doc: &CcrsDocument, inputs: &BTreeMap<String, Sig>, depth: usize) -> Result<BTreeMap<String, Sig>, Diagnostic> {
        if depth > 64 {
            return Err(Diagnostic::error(Code::UnknownModule, "instance hierarchy is too deep or recursive"));
        }
        let all = doc.all_stns();
        // One cell per Stn output pin.
        let mut pin_sig: BTreeMap<(&str, usize), Sig> = BTreeMap::new();
        for (s, _) in &all {
            for i in 0..s.outputs.len() {
                self.cells.push(Cell::Zero);
                pin_sig.insert((s.id.as_str(), i), self.cells.len() - 1);
            }
        }
        let drivers = doc.driver_map();
        let input_sig = |stn: &str, pin: usize| -> Option<Sig> {
            let key = crate::ir::Endpoint::new(stn, pin);
            let l = &doc.lwcs[*drivers.get(&key)?];
            pin_sig.get(&(l.source.stn.as_str(), l.source.pin)).copied()
        };
        let zero = {
            self.cells.push(Cell::Zero);
            self.cells.len() - 1
        };
        let drv = |stn: &str, pin: usize| input_sig(stn, pin).unwrap_or(zero);

        let mut outs = BTreeMap::new();
        for (s, _) in &all {
            let id = s.id.as_str();
            let cell = match s.kind {
                StnKind::Port => {
                    let name = &s.label;
                    if s.outputs.len() == 1 {
                        Cell::Alias(inputs.get(name).copied().unwrap_or(zero))
                    } else {
                        outs.insert(name.clone(), drv(id, 0));
                        continue;
                    }
                }
                StnKind::Constant => Cell::Const(s.attr_u64("value").unwrap_or(0)),
                StnKind::DataOp => {
                    let op = s.opcode.ok_or_else(|| Diagnostic::error(Code::Shape, format!("{id}: DataOp without opcode")))?;
                    let param = match op {
                        Opcode::Shl | Opcode::Shr => s.attr_u64("amount").unwrap_or(0),
                        Opcode::Slice => {
                            let (m, l) = s.slice_range().unwrap_or((0, 0));
                            slice_param(m, l)
                        }
                        _ => 0,
                    };
                    let ins = s.inputs.iter().enumerate().map(|(i, p)| (drv(id, i), p.width)).collect();
                    Cell::Op { op, param, ins, width: s.outputs[0].width }
                }
                StnKind::Branch | StnKind::CaseSelect => {
                    let rows = s.rows().unwrap_or_default();
                    let pin = |name: &str| s.input_index(name).map(|i| drv(id, i)).unwrap_or(zero);
                    if s.kind == StnKind::Branch {
                        Cell::Branch { rows: rows.iter().map(|r| (r.cond.as_deref().map(pin), pin(&r.value))).collect() }
                    } else {
                        Cell::Case { sel: pin("sel"), rows: rows.iter().map(|r| (r.labels.clone(), pin(&r.value))).collect() }
                    }
                }
                StnKind::Timing => {
                    let clock_name = s
                        .attr_str("domain")
                        .and_then(|d| doc.clock_domains.iter().find(|c| c.id == d))
                        .map(|c| c.clock.clone())
                        .unwrap_or_default();
                    let clock = pin_sig.get(&(CcrsDocument::port_stn_id(&clock_name).as_str(), 0)).copied().unwrap_or(zero);
                    Cell::Reg { d: drv(id, 0), clock }
                }
                StnKind::Instance => {
                    let module = s.attr_str("module").unwrap_or_default();
                    let child = self
                        .lib
                        .iter()
                        .find(|d| d.module == module)
                        .ok_or_else(|| Diagnostic::error(Code::UnknownModule, format!("{id}: unknown module {module}")))?;
                    let bindings: BTreeMap<String, Sig> =
                        s.inputs.iter().enumerate().map(|(i, p)| (p.name.clone(), drv(id, i))).collect();
                    let child_outs = self.flatten(child, &bindings, depth + 1)?;
                    for (j, p) in s.outputs.iter().enumerate() {
                        let sig = child_outs.get(&p.name).copied().unwrap_or(zero);
                        self.cells[pin_sig[&(id, j)]] = Cell::Alias(sig);
                    }
                    continue;
                }
            };
            self.cells[pin_sig[&(id, 0)]] = cell;
        }
        Ok(outs)
    }
}

fn topo_order(cells: &[Cell]) -> Result<Vec<usize>, Diagnostic> {
    let n = cells.len();
    let mut indeg = vec![0usize; n];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, c) in cells.iter().enumerate() {
        for d in c.deps() {
            indeg[i] += 1;
            users[d].push(i);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|i| indeg[*i] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &u in &users[i] {
            indeg[u] -= 1;
            if indeg[u] == 0 {
                ready.push(u);
            }
        }
    }
    if order.len() != n {
        return Err(Diagnostic::error(Code::CombCycle, "combinational cycle in flattened document"));
    }
    Ok(order)
}

impl Model for DocModel {
    fn inputs(&self) -> &[(String, u32)] {
        &self.inputs
    }

    fn outputs(&self) -> &[(String, u32)] {
        &self.outputs
    }

    fn is_sequential(&self) -> bool {
        !self.regs.is_empty()
    }

    fn run_unchecked(&self, stim: &Stimulus) -> Trace {
        let mut values = vec![0u64; self.cells.len()];
        let mut state = vec![0u64; self.cells.len()];
        let mut trace = Vec::with_capacity(stim.cycles.len());
        let input_values: Vec<Vec<u64>> =
            stim.cycles.iter().map(|c| self.inputs.iter().map(|(n, _)| c[n]).collect()).collect();
        for vector in &input_values {
            for &i in &self.order {
                values[i] = match &self.cells[i] {
                    Cell::Input(k) => vector[*k],
                    Cell::Const(v) => *v,
                    Cell::Zero => 0,
                    Cell::Alias(s) => values[*s],
                    Cell::Reg { .. } => state[i],
                    Cell::Op { op, param, ins, width } => {
                        let args: Vec<(u64, u32)> = ins.iter().map(|(s, w)| (values[*s], *w)).collect();
                        eval(*op, &args, *width, *param)
                    }
                    Cell::Branch { rows } => rows
                        .iter()
                        .find(|(c, _)| c.is_none_or(|c| values[c] != 0))
                        .map(|(_, v)| values[*v])
                        .unwrap_or(0),
                    Cell::Case { sel, rows } => {
                        let s = values[*sel];
                        rows.iter()
                            .find(|(labels, _)| labels.as_ref().is_none_or(|l| l.contains(&s)))
                            .map(|(_, v)| values[*v])
                            .unwrap_or(0)
                    }
                };
            }
            trace.push(self.outputs.iter().zip(&self.output_sigs).map(|((n, _), s)| (n.clone(), values[*s])).collect());
            for &r in &self.regs {
                if let Cell::Reg { d, clock } = &self.cells[r] {
                    if values[*clock] != 0 {
                        state[r] = values[*d];
                    }
                }
            }
        }
        trace
    }
}
