//! Acceptance gate. Prints one PASS or FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use ccrs_core::corpus::{Design, DESIGNS};
use ccrs_core::emit::emit;
use ccrs_core::hdl::{elaborate, parse_source};
use ccrs_core::ir::{canonical_form, validate, CcrsDocument, StnKind};
use ccrs_core::layout::{check_geometry, layout};
use ccrs_core::ops::{Opcode, SemanticClass};
use ccrs_core::sim::{check_equivalence, DocModel, EquivOptions, HdlModel, Model, Verdict};
use ccrs_core::svg::{render, RenderOptions};
use ccrs_core::templater::symbols::glyph;
use ccrs_core::templater::{lower_module, SymbolTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn lower(src: &str, top: &str) -> Result<CcrsDocument, String> {
    let ast = parse_source(src).map_err(|e| format!("parse: {e:?}"))?;
    let design = elaborate(&ast).map_err(|e| format!("elaborate: {e:?}"))?;
    lower_module(&design, top).map_err(|e| format!("lower: {e:?}"))
}

fn hdl_model(src: &str, top: &str) -> Result<HdlModel, String> {
    let design = elaborate(&parse_source(src).map_err(|e| format!("{e:?}"))?).map_err(|e| format!("{e:?}"))?;
    HdlModel::new(&design, top).map_err(|e| e.to_string())
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    for d in DESIGNS {
        let doc = lower(d.source, d.top)?;
        let text = emit(&doc).map_err(|e| format!("{}: emit {e:?}", d.name))?;
        let back = lower(&text, d.top).map_err(|e| format!("{}: {e}", d.name))?;
        if canonical_form(&doc) != canonical_form(&back) {
            return Err(format!("{}: canonical forms differ", d.name));
        }
    }
    let t = start.elapsed();
    if t >= Duration::from_secs(1) {
        return Err(format!("took {t:?}, limit 1 s"));
    }
    Ok(format!("{n}/{n} designs in {t:?}", n = DESIGNS.len()))
}

fn input_bits(m: &dyn Model) -> u32 {
    m.inputs().iter().map(|(_, w)| w).sum()
}

fn semantic_preservation() -> Outcome {
    let start = Instant::now();
    let mut exhaustive = 0u64;
    for d in DESIGNS {
        let src = hdl_model(d.source, d.top)?;
        let doc = DocModel::new(&lower(d.source, d.top)?).map_err(|e| e.to_string())?;
        let bits = input_bits(&src) as u64;
        // Combinational designs enumerate every input once; sequential ones
        // every sequence of 4 cycles.
        let depth = if d.sequential { 4 } else { 1 };
        let opts = EquivOptions { budget: 1 << (bits * depth), depth: depth as usize, ..EquivOptions::default() };
        match check_equivalence(&src, &doc, &opts).map_err(|e| e.to_string())? {
            Verdict::Equivalent { evaluations, exhaustive: true } => exhaustive += evaluations,
            v => return Err(format!("{}: exhaustive check gave {v:?}", d.name)),
        }
        if !d.sequential && bits > 10 {
            return Err(format!("{}: {bits} input bits exceeds the 10-bit corpus bound", d.name));
        }
        let random = EquivOptions { budget: 0, vectors: 1000, cycles: 32, seed: 0x5eed, ..EquivOptions::default() };
        match check_equivalence(&src, &doc, &random).map_err(|e| e.to_string())? {
            Verdict::Inconclusive { evaluations: 1000 } => {}
            v => return Err(format!("{}: random check gave {v:?}", d.name)),
        }
    }
    let t = start.elapsed();
    if t >= Duration::from_secs(10) {
        return Err(format!("took {t:?}, limit 10 s"));
    }
    Ok(format!("{} designs, {exhaustive} exhaustive sequences, 1000 random sequences each, 0 mismatches, {t:?}", DESIGNS.len()))
}

fn svg_for(doc: &CcrsDocument) -> Result<String, String> {
    render(doc, &layout(doc), &SymbolTable::default(), &RenderOptions::default()).map_err(|e| e.to_string())
}

/// (R1) every node is one plain rect, (R2) widening an operator changes
/// only that node, (R3) deep nesting goes through the whole pipeline.
fn template_regulations() -> Outcome {
    for d in DESIGNS {
        let doc = lower(d.source, d.top)?;
        let svg = svg_for(&doc)?;
        let xml = roxmltree::Document::parse(&svg).map_err(|e| e.to_string())?;
        for (s, _) in doc.all_stns() {
            let id = format!("stn-{}", s.id);
            let nodes: Vec<_> = xml.descendants().filter(|n| n.attribute("id") == Some(id.as_str())).collect();
            if nodes.len() != 1 || !nodes[0].has_tag_name("rect") || nodes[0].attribute("transform").is_some() {
                return Err(format!("R1: {}: {id} is not one axis-aligned rect", d.name));
            }
        }
    }

    let base = lower("module w(input a, input b, output y); assign y = a & b; endmodule", "w")?;
    let mut wide = base.clone();
    let op = base.stns.iter().find(|s| s.kind == StnKind::DataOp).ok_or("R2: no operator")?.id.clone();
    {
        let s = wide.stn_mut(&op).ok_or("R2: operator vanished")?;
        for i in 2..5 {
            s.inputs.push(ccrs_core::ir::Pin::new(format!("in{i}"), 1));
        }
    }
    for (i, port) in [(2, "port.a"), (3, "port.b"), (4, "port.a")] {
        let l = wide.lwcs.iter_mut().find(|l| l.source.stn == port).ok_or("R2: input net missing")?;
        l.sinks.push(ccrs_core::ir::Endpoint::new(&op, i));
    }
    let errs: Vec<_> = validate(&wide).into_iter().filter(|d| d.is_error()).collect();
    if !errs.is_empty() {
        return Err(format!("R2: widened document invalid: {errs:?}"));
    }
    let (before, after) = (base.stn(&op).unwrap(), wide.stn(&op).unwrap());
    if (before.kind, &before.label, &before.children) != (after.kind, &after.label, &after.children) {
        return Err("R2: kind, label or children changed".into());
    }
    let (g0, g1) = (layout(&base), layout(&wide));
    if g1.boxes[&op].h <= g0.boxes[&op].h || g1.boxes[&op].x != g0.boxes[&op].x {
        return Err(format!("R2: operator box {:?} -> {:?}", g0.boxes[&op], g1.boxes[&op]));
    }
    for (s, _) in base.all_stns() {
        let (b0, b1) = (g0.boxes[&s.id], g1.boxes[&s.id]);
        if s.id != op && (b0.x, b0.w, b0.h) != (b1.x, b1.w, b1.h) {
            return Err(format!("R2: {} changed from {b0:?} to {b1:?}", s.id));
        }
        if s.id != op && Some(s) != wide.stn(&s.id) {
            return Err(format!("R2: {} changed", s.id));
        }
    }

    let deep = "module deep(input [3:0] a, input [3:0] b, input c, output [3:0] y);\n\
                assign y = ((((a & b) | (a ^ ~b)) + ((a - b) & {c, c, c, c})) ^ (c ? (a | 4'd3) : (b << 1)));\nendmodule\n";
    let doc = lower(deep, "deep")?;
    if doc.stns.iter().filter(|s| s.kind == StnKind::DataOp).count() < 8 {
        return Err("R3: expression did not lower to a deep operator tree".into());
    }
    let errs: Vec<_> = validate(&doc).into_iter().filter(|d| d.is_error()).collect();
    if !errs.is_empty() {
        return Err(format!("R3: {errs:?}"));
    }
    roxmltree::Document::parse(&svg_for(&doc)?).map_err(|e| format!("R3: {e}"))?;
    let back = lower(&emit(&doc).map_err(|e| format!("R3: {e:?}"))?, "deep")?;
    if canonical_form(&back) != canonical_form(&doc) {
        return Err("R3: round trip changed the document".into());
    }
    Ok("R1 all corpus nodes, R2 2->5 operands, R3 depth-5 expression".into())
}

fn glyph_disambiguation() -> Outcome {
    let table = SymbolTable::default();
    let pairs = [
        (Opcode::BitAnd, SemanticClass::Bitwise),
        (Opcode::BitOr, SemanticClass::Bitwise),
        (Opcode::BitNot, SemanticClass::Bitwise),
        (Opcode::LogAnd, SemanticClass::Logical),
        (Opcode::LogOr, SemanticClass::Logical),
        (Opcode::LogNot, SemanticClass::Logical),
    ];
    let glyphs: BTreeSet<&str> = pairs.iter().map(|(op, class)| table.symbol_for(*op, *class)).collect();
    if glyphs.len() != 6 || glyphs.iter().any(|g| g.is_empty()) {
        return Err(format!("{glyphs:?}"));
    }
    Ok(format!("6 distinct glyphs {}", glyphs.into_iter().collect::<Vec<_>>().join(" ")))
}

fn layout_invariants() -> Outcome {
    let mut boxes = 0;
    let mut wires = 0;
    for d in DESIGNS {
        let doc = lower(d.source, d.top)?;
        let geo = layout(&doc);
        let errs = check_geometry(&doc, &geo);
        if !errs.is_empty() {
            return Err(format!("{}: {errs:?}", d.name));
        }
        let first = (serde_json::to_string(&geo).unwrap(), svg_for(&doc)?);
        for _ in 1..3 {
            let again = (serde_json::to_string(&layout(&doc)).unwrap(), svg_for(&doc)?);
            if again != first {
                return Err(format!("{}: output differs between runs", d.name));
            }
        }
        boxes += geo.boxes.len();
        wires += geo.routes.values().map(Vec::len).sum::<usize>();
    }
    Ok(format!("{} designs, {boxes} boxes, {wires} wire ends on anchors, 0 overlaps, 3 identical runs", DESIGNS.len()))
}

const FLIP_GROUPS: &[&[Opcode]] = &[
    &[Opcode::BitAnd, Opcode::BitOr, Opcode::BitXor],
    &[Opcode::LogAnd, Opcode::LogOr],
    &[Opcode::RedAnd, Opcode::RedOr, Opcode::RedXor],
    &[Opcode::Add, Opcode::Sub, Opcode::Mul],
    &[Opcode::Eq, Opcode::Ne, Opcode::Lt, Opcode::Le, Opcode::Gt, Opcode::Ge],
    &[Opcode::Shl, Opcode::Shr],
];

/// Flip the opcode of one random operator to another of the same shape.
fn mutate(doc: &CcrsDocument, rng: &mut ChaCha8Rng) -> Option<CcrsDocument> {
    let ops: Vec<String> = doc
        .all_stns()
        .into_iter()
        .filter(|(s, _)| s.opcode.is_some_and(|o| FLIP_GROUPS.iter().any(|g| g.contains(&o))))
        .filter(|(s, _)| s.inputs.len() == 2 || !matches!(s.opcode, Some(Opcode::Add | Opcode::Sub | Opcode::Mul)))
        .map(|(s, _)| s.id.clone())
        .collect();
    if ops.is_empty() {
        return None;
    }
    let mut m = doc.clone();
    let s = m.stn_mut(&ops[rng.random_range(0..ops.len())])?;
    let old = s.opcode?;
    let group = FLIP_GROUPS.iter().find(|g| g.contains(&old))?;
    let others: Vec<Opcode> = group.iter().copied().filter(|o| *o != old).collect();
    let new = others[rng.random_range(0..others.len())];
    s.opcode = Some(new);
    s.label = glyph(new).to_string();
    Some(m)
}

/// Independent judgement of whether two HDL texts behave differently:
/// every input for combinational designs, long random runs for sequential ones.
fn really_differs(a: &HdlModel, b: &HdlModel, sequential: bool, rng: &mut ChaCha8Rng) -> bool {
    let inputs = a.inputs().to_vec();
    let stimuli: Vec<Vec<std::collections::BTreeMap<String, u64>>> = if sequential {
        (0..300)
            .map(|_| {
                (0..64)
                    .map(|_| inputs.iter().map(|(n, w)| (n.clone(), rng.random::<u64>() & ((1u64 << w) - 1))).collect())
                    .collect()
            })
            .collect()
    } else {
        let bits: u32 = inputs.iter().map(|(_, w)| w).sum();
        (0..1u64 << bits)
            .map(|mut k| {
                let cycle = inputs
                    .iter()
                    .map(|(n, w)| {
                        let v = k & ((1u64 << w) - 1);
                        k >>= w;
                        (n.clone(), v)
                    })
                    .collect();
                vec![cycle]
            })
            .collect()
    };
    stimuli.into_iter().any(|cycles| {
        let s = ccrs_core::sim::Stimulus { cycles };
        a.simulate(&s).unwrap() != b.simulate(&s).unwrap()
    })
}

/// Mutants that an independent oracle finds behaviourally different must
/// each get a counterexample that replays; mutants it finds equal are
/// counted and skipped.
fn oracle_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut oracle_rng = ChaCha8Rng::seed_from_u64(99);
    let docs: Vec<(&Design, CcrsDocument)> = DESIGNS.iter().map(|d| Ok((d, lower(d.source, d.top)?))).collect::<Result<_, String>>()?;
    let (mut found, mut skipped, mut attempts) = (0, 0, 0);
    while found < 100 {
        attempts += 1;
        if attempts > 10_000 {
            return Err(format!("only {found} differing mutants in {attempts} attempts"));
        }
        let (design, doc) = &docs[rng.random_range(0..docs.len())];
        let Some(mutant) = mutate(doc, &mut rng) else { continue };
        if validate(&mutant).iter().any(|d| d.is_error()) {
            continue;
        }
        let ta = emit(doc).map_err(|e| format!("{e:?}"))?;
        let tb = emit(&mutant).map_err(|e| format!("{e:?}"))?;
        let (ha, hb) = (hdl_model(&ta, &doc.module)?, hdl_model(&tb, &doc.module)?);
        let differs = really_differs(&ha, &hb, design.sequential, &mut oracle_rng);
        let (a, b) = (DocModel::new(doc).map_err(|e| e.to_string())?, DocModel::new(&mutant).map_err(|e| e.to_string())?);
        match check_equivalence(&a, &b, &EquivOptions::default()).map_err(|e| e.to_string())? {
            Verdict::Counterexample(cex) => {
                // Replay on the HDL simulator, through emitted text of both documents.
                let ra = ha.simulate(&cex.stimulus).map_err(|e| e.to_string())?;
                let rb = hb.simulate(&cex.stimulus).map_err(|e| e.to_string())?;
                let (va, vb) = (ra[cex.cycle][&cex.port], rb[cex.cycle][&cex.port]);
                if va == vb || (va, vb) != (cex.a, cex.b) {
                    return Err(format!("{}: counterexample does not replay: {cex:?}", design.name));
                }
                if !differs {
                    return Err(format!("{}: independent oracle missed a real difference", design.name));
                }
                found += 1;
            }
            v if differs => return Err(format!("{}: false {v:?} for a differing mutant", design.name)),
            _ => skipped += 1,
        }
    }
    Ok(format!("{found}/100 differing mutants refuted, every counterexample replays, 0 false equivalents ({skipped} equivalent mutants skipped)"))
}

fn cli_contract() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let path = |n: &str| dir.path().join(n);
    let put = |n: &str, text: &str| std::fs::write(path(n), text).map_err(|e| e.to_string());
    let run = |args: &[String]| -> Result<i32, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_ccrs")).args(args).output().map_err(|e| e.to_string())?;
        out.status.code().ok_or_else(|| "killed by signal".into())
    };
    let f = |n: &str| path(n).display().to_string();
    let a = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<String>>();
    put("and.v", "module g(input a, input b, output y); assign y = a & b; endmodule\n")?;
    put("or.v", "module g(input a, input b, output y); assign y = a | b; endmodule\n")?;
    put("bad.v", "module g(input a, output y) assign y = a; endmodule\n")?;
    put("broken.ccrs.json", "{\"version\": \"1\"}")?;
    put("wide.v", "module w(input clk, input [22:0] d, output reg [22:0] q); always @(posedge clk) q <= d; endmodule\n")?;
    let cases: Vec<(&str, Vec<String>, i32)> = vec![
        ("happy path", a(&["convert", &f("and.v"), "-o", &f("and.ccrs.json")]), 0),
        ("parse error", a(&["convert", &f("bad.v")]), 1),
        ("invalid document", a(&["emit", &f("broken.ccrs.json")]), 2),
        ("counterexample", a(&["check", &f("and.v"), &f("or.v")]), 3),
        ("budget exhaustion", a(&["check", &f("wide.v"), &f("wide.v"), "--budget", "16", "--vectors", "10"]), 4),
        ("I/O failure", a(&["convert", &f("missing.v")]), 10),
        ("flag error", a(&["render", &f("and.ccrs.json"), "--scale", "0"]), 11),
        ("equivalent", a(&["check", &f("and.v"), &f("and.ccrs.json")]), 0),
    ];
    for (name, args, want) in &cases {
        let got = run(args)?;
        if got != *want {
            return Err(format!("{name}: exit {got}, expected {want}"));
        }
    }
    Ok(format!("{} exit-code cases", cases.len()))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("round-trip isomorphism", round_trip),
        ("semantic preservation", semantic_preservation),
        ("template regulations", template_regulations),
        ("glyph disambiguation", glyph_disambiguation),
        ("layout invariants", layout_invariants),
        ("oracle soundness", oracle_soundness),
        ("CLI contract", cli_contract),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} of {} acceptance criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
