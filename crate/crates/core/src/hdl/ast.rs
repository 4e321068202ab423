//! Syntax tree for the accepted HDL subset.
//!
//! The same tree is used before and after elaboration: elaboration replaces
//! parameter references with literals, turns selects into resolved
//! [`ExprKind::Slice`] nodes and fills in every [`Expr::width`].

use crate::diag::Span;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HdlAst {
    pub modules: Vec<Module>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Module {
    pub name: String,
    pub span: Span,
    pub params: Vec<Param>,
    pub ports: Vec<PortDecl>,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Input,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetKind {
    Wire,
    Reg,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Range {
    pub msb: Expr,
    pub lsb: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub value: Expr,
    pub local: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortDecl {
    pub name: String,
    pub dir: Direction,
    pub kind: NetKind,
    pub range: Option<Range>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetDecl {
    pub name: String,
    pub kind: NetKind,
    pub range: Option<Range>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Net(NetDecl),
    Param(Param),
    Assign(ContAssign),
    Always(Always),
    Instance(Instance),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContAssign {
    pub target: String,
    pub target_span: Span,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sensitivity {
    Posedge { clock: String, span: Span },
    Star,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Always {
    pub sensitivity: Sensitivity,
    pub body: Stmt,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub module: String,
    pub name: String,
    pub bindings: Vec<Binding>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub port: String,
    pub expr: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseItem {
    pub labels: Vec<Expr>,
    pub body: Stmt,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Block(Vec<Stmt>),
    If { cond: Expr, then: Box<Stmt>, els: Option<Box<Stmt>> },
    Case { selector: Expr, items: Vec<CaseItem>, default: Option<Box<Stmt>> },
    Assign { target: String, target_span: Span, blocking: bool, expr: Expr },
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    BitNot,
    LogNot,
    RedAnd,
    RedOr,
    RedXor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    BitAnd,
    BitOr,
    BitXor,
    LogAnd,
    LogOr,
    Add,
    Sub,
    Mul,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::BitXor => "^",
            BinaryOp::LogAnd => "&&",
            BinaryOp::LogOr => "||",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
        }
    }

    /// Binding strength; larger binds tighter. The ternary operator sits
    /// below every binary operator.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::LogOr => 1,
            BinaryOp::LogAnd => 2,
            BinaryOp::BitOr => 3,
            BinaryOp::BitXor => 4,
            BinaryOp::BitAnd => 5,
            BinaryOp::Eq | BinaryOp::Ne => 6,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 7,
            BinaryOp::Shl | BinaryOp::Shr => 8,
            BinaryOp::Add | BinaryOp::Sub => 9,
            BinaryOp::Mul => 10,
        }
    }

    pub fn from_symbol(sym: &str) -> Option<BinaryOp> {
        Some(match sym {
            "&" => BinaryOp::BitAnd,
            "|" => BinaryOp::BitOr,
            "^" => BinaryOp::BitXor,
            "&&" => BinaryOp::LogAnd,
            "||" => BinaryOp::LogOr,
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "<<" => BinaryOp::Shl,
            ">>" => BinaryOp::Shr,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    /// Bit width; 0 until elaboration annotates it.
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Ident(String),
    /// `width` is `None` for unsized literals.
    Literal { width: Option<u32>, value: u64 },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Concat(Vec<Expr>),
    /// `name[msb]` or `name[msb:lsb]` as written.
    Select { name: String, msb: Box<Expr>, lsb: Option<Box<Expr>> },
    /// Resolved constant-index slice of any expression.
    Slice { base: Box<Expr>, msb: u32, lsb: u32 },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span, width: 0 }
    }

    pub fn with_width(kind: ExprKind, span: Span, width: u32) -> Self {
        Self { kind, span, width }
    }

    /// Visit every node, parents before children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Ident(_) | ExprKind::Literal { .. } => {}
            ExprKind::Unary(_, x) => x.walk(f),
            ExprKind::Binary(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
            ExprKind::Ternary(c, a, b) => {
                c.walk(f);
                a.walk(f);
                b.walk(f);
            }
            ExprKind::Concat(items) => items.iter().for_each(|x| x.walk(f)),
            ExprKind::Select { msb, lsb, .. } => {
                msb.walk(f);
                if let Some(l) = lsb {
                    l.walk(f);
                }
            }
            ExprKind::Slice { base, .. } => base.walk(f),
        }
    }

    /// Names of nets read by this expression.
    pub fn reads(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| match &e.kind {
            ExprKind::Ident(n) | ExprKind::Select { name: n, .. } => out.push(n.as_str()),
            _ => {}
        });
        out
    }
}

impl Stmt {
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::Block(items) => items.iter().for_each(|s| s.walk(f)),
            StmtKind::If { then, els, .. } => {
                then.walk(f);
                if let Some(e) = els {
                    e.walk(f);
                }
            }
            StmtKind::Case { items, default, .. } => {
                items.iter().for_each(|i| i.body.walk(f));
                if let Some(d) = default {
                    d.walk(f);
                }
            }
            StmtKind::Assign { .. } | StmtKind::Empty => {}
        }
    }

    /// Assignment targets in order of first appearance.
    pub fn targets(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.walk(&mut |s| {
            if let StmtKind::Assign { target, .. } = &s.kind {
                if !out.contains(target) {
                    out.push(target.clone());
                }
            }
        });
        out
    }
}
