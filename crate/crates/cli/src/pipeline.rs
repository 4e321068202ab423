//! The conversions shared by the command line and the HTTP service.

use ccrs_core::diag::{has_errors, Code, Diagnostic};
use ccrs_core::emit::emit;
use ccrs_core::hdl::{elaborate, parse_source};
use ccrs_core::ir::{canonical_form, deserialize, validate, CcrsDocument};
use ccrs_core::sim::{DocModel, HdlModel, Model};
use ccrs_core::templater::lower_module;

/// Why a step failed. Each kind has a fixed exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// HDL text did not parse or elaborate.
    Parse(Vec<Diagnostic>),
    /// Lowering failed, or a document is malformed or invalid.
    Invalid(Vec<Diagnostic>),
    Io(Diagnostic),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Parse(_) => exit::PARSE,
            Failure::Invalid(_) => exit::INVALID,
            Failure::Io(_) => exit::IO,
        }
    }

    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            Failure::Parse(d) | Failure::Invalid(d) => d.clone(),
            Failure::Io(d) => vec![d.clone()],
        }
    }
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const PARSE: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const COUNTEREXAMPLE: i32 = 3;
    pub const INCONCLUSIVE: i32 = 4;
    pub const IO: i32 = 10;
    pub const FLAGS: i32 = 11;
    pub const BIND: i32 = 12;
}

/// Parse and lower HDL text. Without `top`, the module no other module
/// instantiates is lowered.
pub fn convert_source(source: &str, top: Option<&str>) -> Result<CcrsDocument, Failure> {
    let ast = parse_source(source).map_err(Failure::Parse)?;
    let design = elaborate(&ast).map_err(Failure::Parse)?;
    let top = match top {
        Some(t) => t.to_string(),
        None => design
            .top()
            .map(String::from)
            .ok_or_else(|| Failure::Parse(vec![Diagnostic::error(Code::UnknownModule, "source defines no module")]))?,
    };
    lower_module(&design, &top).map_err(Failure::Invalid)
}

/// Parse a document and reject it if it does not validate.
pub fn load_document(text: &str) -> Result<CcrsDocument, Failure> {
    let doc = deserialize(text).map_err(Failure::Invalid)?;
    check_document(&doc)?;
    Ok(doc)
}

pub fn check_document(doc: &CcrsDocument) -> Result<Vec<Diagnostic>, Failure> {
    let diags = validate(doc);
    if has_errors(&diags) {
        Err(Failure::Invalid(diags))
    } else {
        Ok(diags)
    }
}

/// HDL text for a document. With `self_check`, the text is parsed and
/// lowered again and must give an isomorphic document.
pub fn emit_document(doc: &CcrsDocument, self_check: bool) -> Result<String, Failure> {
    let text = emit(doc).map_err(Failure::Invalid)?;
    if self_check {
        let back = convert_source(&text, Some(&doc.module)).map_err(|f| Failure::Invalid(f.diagnostics()))?;
        if canonical_form(&back) != canonical_form(doc) {
            return Err(Failure::Invalid(vec![Diagnostic::error(
                Code::NoSyntax,
                "emitted text does not lower back to the same document",
            )]));
        }
    }
    Ok(text)
}

/// Document text starts with `{`; anything else is HDL.
pub fn looks_like_document(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

/// A simulation model for either HDL text or a document.
pub fn model_for(text: &str, top: Option<&str>) -> Result<Box<dyn Model + Send>, Failure> {
    if looks_like_document(text) {
        let doc = load_document(text)?;
        let m = DocModel::new(&doc).map_err(|d| Failure::Invalid(vec![d]))?;
        return Ok(Box::new(m));
    }
    let design = elaborate(&parse_source(text).map_err(Failure::Parse)?).map_err(Failure::Parse)?;
    let top = match top {
        Some(t) => t.to_string(),
        None => design.top().unwrap_or_default().to_string(),
    };
    let m = HdlModel::new(&design, &top).map_err(|d| Failure::Invalid(vec![d]))?;
    Ok(Box::new(m))
}
