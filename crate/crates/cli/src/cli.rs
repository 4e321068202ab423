use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use ccrs_core::diag::{Code, Diagnostic};
use ccrs_core::ir::serialize;
use ccrs_core::layout::layout;
use ccrs_core::sim::{check_equivalence, Counterexample, EquivOptions, Verdict};
use ccrs_core::svg::{render, RenderOptions, Theme};
use ccrs_core::templater::SymbolTable;
use clap::{Parser, Subcommand};

use crate::pipeline::{self, exit, Failure};

#[derive(Debug, Parser)]
#[command(name = "ccrs", version, about = "Convert between Verilog and glyph schematics, draw them and check equivalence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lower Verilog to a schematic document.
    Convert {
        input: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Module to lower; defaults to the one no other module instantiates.
        #[arg(long)]
        top: Option<String>,
    },
    /// Write Verilog for a schematic document.
    Emit {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Parse the emitted text again and require the same document.
        #[arg(long)]
        self_check: bool,
    },
    /// Draw a schematic document as SVG, laying it out if it has no geometry.
    Render {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        clock_regions: bool,
        #[arg(long)]
        net_names: bool,
        #[arg(long, default_value_t = 1.0, value_parser = positive_scale)]
        scale: f64,
    },
    /// Compare two designs, each given as Verilog or as a document.
    Check {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        top: Option<String>,
        /// Largest number of stimulus sequences enumerated exhaustively.
        #[arg(long, default_value_t = EquivOptions::default().budget)]
        budget: u64,
        /// Cycles per sequence in exhaustive checks of sequential designs.
        #[arg(long, default_value_t = EquivOptions::default().depth)]
        depth: usize,
        /// Cycles per random sequence.
        #[arg(long, default_value_t = EquivOptions::default().cycles)]
        cycles: usize,
        /// Random sequences when the input space exceeds the budget.
        #[arg(long, default_value_t = EquivOptions::default().vectors)]
        vectors: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Report every problem in a schematic document.
    Validate { input: PathBuf },
    /// Serve the JSON API and, optionally, a directory of static files.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

fn positive_scale(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(_) => Err("scale must be a positive number".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn report(file: &Path, diags: &[Diagnostic]) {
    let name = file.display().to_string();
    for d in diags {
        eprintln!("{}", d.render(&name));
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(Diagnostic::error(Code::Io, format!("cannot read {}: {e}", path.display()))))
}

fn write(path: Option<&Path>, content: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| {
        let target = path.map_or("standard output".to_string(), |p| p.display().to_string());
        Failure::Io(Diagnostic::error(Code::Io, format!("cannot write {target}: {e}")))
    };
    match path {
        Some(p) => std::fs::write(p, content).map_err(io),
        None => std::io::stdout().write_all(content.as_bytes()).map_err(io),
    }
}

/// Inputs and outputs of each cycle up to the first difference.
pub fn counterexample_table(cex: &Counterexample) -> String {
    let inputs: Vec<&String> = cex.stimulus.cycles.first().map(|c| c.keys().collect()).unwrap_or_default();
    let mut out = String::from("cycle");
    for n in &inputs {
        out.push_str(&format!("  {n}"));
    }
    out.push('\n');
    for (i, c) in cex.stimulus.cycles.iter().enumerate() {
        out.push_str(&format!("{i:>5}"));
        for n in &inputs {
            out.push_str(&format!("  {:>w$}", c[*n], w = n.len()));
        }
        out.push('\n');
    }
    out.push_str(&format!("mismatch at cycle {} on {}: first={} second={}\n", cex.cycle, cex.port, cex.a, cex.b));
    out
}

fn run_command(cmd: Command) -> Result<i32, (PathBuf, Failure)> {
    match cmd {
        Command::Convert { input, output, top } => {
            let at = |f| (input.clone(), f);
            let doc = pipeline::convert_source(&read(&input).map_err(at)?, top.as_deref()).map_err(at)?;
            write(output.as_deref(), &serialize(&doc)).map_err(at)?;
            log::info!("converted module {}", doc.module);
            Ok(exit::OK)
        }
        Command::Emit { input, output, self_check } => {
            let at = |f| (input.clone(), f);
            let doc = pipeline::load_document(&read(&input).map_err(at)?).map_err(at)?;
            let text = pipeline::emit_document(&doc, self_check).map_err(at)?;
            write(output.as_deref(), &text).map_err(at)?;
            Ok(exit::OK)
        }
        Command::Render { input, output, clock_regions, net_names, scale } => {
            let at = |f| (input.clone(), f);
            let doc = pipeline::load_document(&read(&input).map_err(at)?).map_err(at)?;
            let geo = doc.geometry.clone().unwrap_or_else(|| layout(&doc));
            let opts = RenderOptions { show_clock_regions: clock_regions, show_net_names: net_names, scale, theme: Theme::Default };
            let svg = render(&doc, &geo, &SymbolTable::default(), &opts).map_err(|d| at(Failure::Invalid(vec![d])))?;
            write(output.as_deref(), &svg).map_err(at)?;
            Ok(exit::OK)
        }
        Command::Check { a, b, top, budget, depth, cycles, vectors, seed } => {
            let ma = pipeline::model_for(&read(&a).map_err(|f| (a.clone(), f))?, top.as_deref()).map_err(|f| (a.clone(), f))?;
            let mb = pipeline::model_for(&read(&b).map_err(|f| (b.clone(), f))?, top.as_deref()).map_err(|f| (b.clone(), f))?;
            let opts = EquivOptions { budget, depth, vectors, cycles, seed };
            let verdict = check_equivalence(ma.as_ref(), mb.as_ref(), &opts).map_err(|d| (b.clone(), Failure::Invalid(vec![d])))?;
            let (code, text) = match &verdict {
                Verdict::Equivalent { evaluations, exhaustive } => (
                    exit::OK,
                    format!("equivalent ({evaluations} sequences, {})\n", if *exhaustive { "exhaustive" } else { "sampled" }),
                ),
                Verdict::Counterexample(cex) => (exit::COUNTEREXAMPLE, counterexample_table(cex)),
                Verdict::Inconclusive { evaluations } => {
                    (exit::INCONCLUSIVE, format!("inconclusive: no difference in {evaluations} random sequences\n"))
                }
            };
            write(None, &text).map_err(|f| (a.clone(), f))?;
            Ok(code)
        }
        Command::Validate { input } => {
            let at = |f| (input.clone(), f);
            let doc = ccrs_core::ir::deserialize(&read(&input).map_err(at)?).map_err(|d| at(Failure::Invalid(d)))?;
            let warnings = pipeline::check_document(&doc).map_err(at)?;
            report(&input, &warnings);
            Ok(exit::OK)
        }
        Command::Serve { host, port, static_dir } => Ok(crate::api::serve(&host, port, static_dir)),
    }
}

/// Run the command line and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::FLAGS } else { exit::OK };
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err((path, failure)) => {
            report(&path, &failure.diagnostics());
            failure.exit_code()
        }
    }
}
