//! Diagnostics shared by every stage of the pipeline.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Location of a construct in HDL source text.
///
/// `offset` and `len` are byte offsets into the source; `line` and `col` are
/// 1-based and count characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub offset: usize,
    pub len: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(offset: usize, len: usize, line: u32, col: u32) -> Self {
        Self { offset, len, line, col }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn join(self, other: Span) -> Span {
        let (first, last) = if self.offset <= other.offset { (self, other) } else { (other, self) };
        let end = (last.offset + last.len).max(first.offset + first.len);
        Span { offset: first.offset, len: end - first.offset, line: first.line, col: first.col }
    }

    pub fn slice<'a>(&self, source: &'a str) -> &'a str {
        &source[self.offset..self.offset + self.len]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
            Severity::Warning => f.write_str("warning"),
        }
    }
}

macro_rules! codes {
    ($($variant:ident => $text:literal, $doc:literal;)*) => {
        /// The fixed enumeration of diagnostic codes.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Code {
            $(#[doc = $doc] $variant,)*
        }

        impl Code {
            pub const ALL: &'static [Code] = &[$(Code::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Code::$variant => $text,)*
                }
            }

            pub fn parse(text: &str) -> Option<Code> {
                match text {
                    $($text => Some(Code::$variant),)*
                    _ => None,
                }
            }

            pub fn description(self) -> &'static str {
                match self {
                    $(Code::$variant => $doc,)*
                }
            }
        }
    };
}

codes! {
    LexChar => "E-LEX-CHAR", "illegal character in source";
    LexComment => "E-LEX-COMMENT", "unterminated block comment";
    LexLiteral => "E-LEX-LITERAL", "malformed numeric literal";
    Syntax => "E-SYNTAX", "unexpected token";
    Unsupported => "E-UNSUPPORTED", "construct outside the accepted HDL subset";
    DupDecl => "E-DUP-DECL", "name declared twice in one module";
    DupModule => "E-DUP-MODULE", "module defined twice";
    Undeclared => "E-UNDECLARED", "identifier does not resolve to a declaration";
    NotConstant => "E-NOT-CONSTANT", "expression must be a compile-time constant";
    Range => "E-RANGE", "bit range is malformed or out of bounds";
    WidthZero => "E-WIDTH-ZERO", "expression or net has zero width";
    WidthLimit => "E-WIDTH-LIMIT", "width exceeds the 64-bit simulator limit";
    MultipleDrivers => "E-MULTI-DRIVER", "net has more than one driver";
    Undriven => "E-UNDRIVEN", "net is read or exported but never driven";
    DriverKind => "E-DRIVER-KIND", "net kind does not match its driver (wire vs reg, input)";
    AssignKind => "E-ASSIGN-KIND", "blocking/nonblocking assignment used in the wrong process kind";
    CombCycle => "E-COMB-CYCLE", "combinational cycle";
    Latch => "W-LATCH", "combinational process does not assign a target on every path";
    LatchLowering => "E-LATCH", "combinational target has no value on some path and cannot be lowered";
    Clock => "E-CLOCK", "clock is not a module input port";
    UnknownModule => "E-UNKNOWN-MODULE", "instance of a module that is not defined";
    RecursiveInstance => "E-RECURSIVE-INSTANCE", "module hierarchy is recursive";
    PortBinding => "E-PORT-BINDING", "instance port binding is invalid";
    DupCase => "E-DUP-CASE", "duplicate case label";
    Version => "E-VERSION", "unknown document format version";
    Schema => "E-SCHEMA", "document does not match the schema";
    DupId => "E-DUP-ID", "duplicate STN or LWC id";
    DanglingRef => "E-DANGLING-REF", "reference to a missing STN or port";
    NoSink => "E-NO-SINK", "LWC has no sink";
    Width => "E-WIDTH", "LWC width does not match a connected port";
    OpWidth => "E-OP-WIDTH", "STN port widths violate its operator width rule";
    Shape => "E-SHAPE", "STN port lists do not match its kind";
    Label => "E-LABEL", "STN label missing or not the glyph for its kind";
    Rows => "E-ROWS", "branch or case rows are malformed";
    Nesting => "E-NESTING", "nested STN violates the nesting rules";
    PinDriver => "E-PIN-DRIVER", "STN input port is not driven by exactly one LWC";
    PortList => "E-PORT-LIST", "module port list and Port STNs disagree";
    NoDomain => "E-NO-DOMAIN", "Timing STN clock domain missing or unknown";
    CaseCoverage => "E-CASE-COVERAGE", "case without default does not cover every selector value";
    InstanceInterface => "E-INSTANCE-IFACE", "Instance STN ports disagree with the child module";
    NoSyntax => "E-NO-SYNTAX", "document uses an operation with no HDL rendering";
    NoGeometry => "E-NO-GEOM", "missing geometry for a referenced STN";
    Stimulus => "E-STIMULUS", "stimulus does not cover the design inputs at their widths";
    Interface => "E-INTERFACE", "compared designs have different port interfaces";
    Io => "E-IO", "file could not be read or written";
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Code {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Code {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Code::parse(&text).ok_or_else(|| serde::de::Error::custom(format!("unknown code {text}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
}

impl Diagnostic {
    pub fn error(code: Code, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, code, message: message.into(), span: None }
    }

    pub fn warning(code: Code, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, code, message: message.into(), span: None }
    }

    pub fn at(mut self, span: Span) -> Self {
        self.span = Some(span);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `file:line:col: severity[code]: message`
    pub fn render(&self, file: &str) -> String {
        let (line, col) = self.span.map(|s| (s.line, s.col)).unwrap_or((0, 0));
        format!("{file}:{line}:{col}: {}[{}]: {}", self.severity, self.code, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]: {}", self.severity, self.code, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
