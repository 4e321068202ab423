//! Cycle-based two-valued simulation and bounded equivalence checking.
//!
//! Every cycle applies one input vector, settles the combinational logic,
//! samples the outputs, and then updates the registers of each clock domain
//! whose clock input is 1 in that vector. Registers start at 0.

mod doc_sim;
mod equiv;
mod hdl_sim;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use doc_sim::DocModel;
pub use equiv::{check_equivalence, Counterexample, EquivOptions, Verdict};
pub use hdl_sim::HdlModel;

use crate::diag::{Code, Diagnostic};
use crate::ops::mask;

/// Input values for each cycle, keyed by input port name.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Stimulus {
    pub cycles: Vec<BTreeMap<String, u64>>,
}

/// Output values for each cycle, keyed by output port name.
pub type Trace = Vec<BTreeMap<String, u64>>;

/// Anything that can be simulated: an elaborated HDL design or a document.
pub trait Model: Sync {
    fn inputs(&self) -> &[(String, u32)];
    fn outputs(&self) -> &[(String, u32)];
    fn is_sequential(&self) -> bool;
    /// Simulate from reset. The stimulus must already be checked.
    fn run_unchecked(&self, stim: &Stimulus) -> Trace;

    fn simulate(&self, stim: &Stimulus) -> Result<Trace, Diagnostic> {
        check_stimulus(self.inputs(), stim)?;
        Ok(self.run_unchecked(stim))
    }
}

pub fn check_stimulus(inputs: &[(String, u32)], stim: &Stimulus) -> Result<(), Diagnostic> {
    if stim.cycles.is_empty() {
        return Err(Diagnostic::error(Code::Stimulus, "stimulus needs at least one cycle"));
    }
    for (i, cycle) in stim.cycles.iter().enumerate() {
        for (name, w) in inputs {
            match cycle.get(name) {
                None => return Err(Diagnostic::error(Code::Stimulus, format!("cycle {i}: no value for input {name}"))),
                Some(v) if v & !mask(*w) != 0 => {
                    return Err(Diagnostic::error(Code::Stimulus, format!("cycle {i}: value {v} does not fit {w}-bit input {name}")))
                }
                _ => {}
            }
        }
        if let Some(extra) = cycle.keys().find(|k| !inputs.iter().any(|(n, _)| n == *k)) {
            return Err(Diagnostic::error(Code::Stimulus, format!("cycle {i}: {extra} is not an input")));
        }
    }
    Ok(())
}
