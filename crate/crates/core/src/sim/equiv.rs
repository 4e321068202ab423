use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Model, Stimulus};
use crate::diag::{Code, Diagnostic};
use crate::ops::mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EquivOptions {
    /// Largest number of stimulus sequences enumerated exhaustively.
    pub budget: u64,
    /// Sequence length for exhaustive checks of sequential designs.
    pub depth: usize,
    /// Random sequences tried when exhaustive enumeration is over budget.
    pub vectors: usize,
    /// Length of each random sequence.
    pub cycles: usize,
    pub seed: u64,
}

impl Default for EquivOptions {
    fn default() -> Self {
        Self { budget: 1 << 20, depth: 4, vectors: 1000, cycles: 32, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub stimulus: Stimulus,
    /// First cycle at which an output differs.
    pub cycle: usize,
    pub port: String,
    pub a: u64,
    pub b: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "camelCase")]
pub enum Verdict {
    /// No difference over every sequence that was tried. `exhaustive` is true
    /// when those were all sequences up to the depth bound.
    Equivalent { evaluations: u64, exhaustive: bool },
    Counterexample(Counterexample),
    /// Random search found no difference; equivalence is not proven.
    Inconclusive { evaluations: u64 },
}

fn sorted_ports(ports: &[(String, u32)]) -> Vec<(String, u32)> {
    let mut v = ports.to_vec();
    v.sort();
    v
}

fn compare(a: &dyn Model, b: &dyn Model, stim: &Stimulus) -> Option<Counterexample> {
    let (ta, tb) = (a.run_unchecked(stim), b.run_unchecked(stim));
    for (cycle, (ra, rb)) in ta.iter().zip(&tb).enumerate() {
        for (port, _) in a.outputs() {
            let (va, vb) = (ra[port], rb[port]);
            if va != vb {
                let stimulus = Stimulus { cycles: stim.cycles[..=cycle].to_vec() };
                return Some(Counterexample { stimulus, cycle, port: port.clone(), a: va, b: vb });
            }
        }
    }
    None
}

/// Compare two models on the same stimuli. Small input spaces are
/// enumerated completely, sequential ones up to `depth` cycles and then
/// sampled with longer random runs; larger spaces are only sampled with a
/// seeded generator.
/// Among failing stimuli the one with the lowest index is reported, so the
/// result does not depend on thread scheduling.
pub fn check_equivalence(a: &dyn Model, b: &dyn Model, opts: &EquivOptions) -> Result<Verdict, Diagnostic> {
    if sorted_ports(a.inputs()) != sorted_ports(b.inputs()) || sorted_ports(a.outputs()) != sorted_ports(b.outputs()) {
        return Err(Diagnostic::error(Code::Interface, "the two designs do not have the same ports and widths"));
    }
    let inputs = a.inputs().to_vec();
    let bits: u64 = inputs.iter().map(|(_, w)| *w as u64).sum();
    let depth = if a.is_sequential() || b.is_sequential() { opts.depth.max(1) } else { 1 };
    let total_bits = bits * depth as u64;

    let mut proven = None;
    if total_bits < 64 && (1u64 << total_bits) <= opts.budget {
        let n = 1u64 << total_bits;
        let found = (0..n).into_par_iter().find_map_first(|k| {
            let cycles = (0..depth)
                .map(|c| {
                    let mut word = k >> (c as u64 * bits);
                    let mut cycle = BTreeMap::new();
                    for (name, w) in &inputs {
                        cycle.insert(name.clone(), word & mask(*w));
                        word = if *w >= 64 { 0 } else { word >> w };
                    }
                    cycle
                })
                .collect();
            compare(a, b, &Stimulus { cycles })
        });
        if let Some(cex) = found {
            return Ok(Verdict::Counterexample(cex));
        }
        if depth == 1 {
            return Ok(Verdict::Equivalent { evaluations: n, exhaustive: true });
        }
        // Sequential proofs only reach the depth bound; longer random runs
        // may still expose state that takes more cycles to reach.
        proven = Some(n);
    }

    let cycles = if depth == 1 { 1 } else { opts.cycles.max(1) };
    let found = (0..opts.vectors as u64).into_par_iter().find_map_first(|k| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k);
        let cycles = (0..cycles)
            .map(|_| inputs.iter().map(|(name, w)| (name.clone(), rng.random::<u64>() & mask(*w))).collect())
            .collect();
        compare(a, b, &Stimulus { cycles })
    });
    Ok(match (found, proven) {
        (Some(cex), _) => Verdict::Counterexample(cex),
        (None, Some(n)) => Verdict::Equivalent { evaluations: n + opts.vectors as u64, exhaustive: true },
        (None, None) => Verdict::Inconclusive { evaluations: opts.vectors as u64 },
    })
}
