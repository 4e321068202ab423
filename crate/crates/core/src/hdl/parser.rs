//! Recursive-descent parser for the HDL subset.

use super::ast::*;
use super::lexer::{Token, TokenKind};
use crate::diag::{Code, Diagnostic, Span};

type PResult<T> = Result<T, Diagnostic>;

/// Parse a token stream into a syntax tree. Stops at the first error.
pub fn parse(tokens: &[Token]) -> Result<HdlAst, Vec<Diagnostic>> {
    let mut p = Parser { toks: tokens, pos: 0 };
    let mut ast = HdlAst::default();
    while !p.at_end() {
        match p.module() {
            Ok(m) => ast.modules.push(m),
            Err(d) => return Err(vec![d]),
        }
    }
    Ok(ast)
}

/// Tokenize and parse in one step.
pub fn parse_source(source: &str) -> Result<HdlAst, Vec<Diagnostic>> {
    let tokens = super::lexer::tokenize(source)?;
    parse(&tokens)
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

fn unsupported(what: &str, span: Span) -> Diagnostic {
    Diagnostic::error(Code::Unsupported, format!("unsupported construct: {what}")).at(span)
}

const UNSUPPORTED_ITEMS: &[&str] = &[
    "initial", "generate", "function", "task", "integer", "genvar", "for", "while", "forever",
    "repeat", "always_ff", "always_comb", "logic", "inout", "signed",
];

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(text))
    }

    fn nth_is(&self, n: usize, text: &str) -> bool {
        self.toks.get(self.pos + n).is_some_and(|t| t.is(text))
    }

    fn eof_span(&self) -> Span {
        self.toks.last().map(|t| Span::new(t.span.offset + t.span.len, 0, t.span.line, t.span.col + t.span.len as u32)).unwrap_or_default()
    }

    fn cur_span(&self) -> Span {
        self.peek().map(|t| t.span).unwrap_or_else(|| self.eof_span())
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> &'a Token {
        let t = &self.toks[self.pos];
        self.pos += 1;
        t
    }

    fn expected(&self, what: &[&str]) -> Diagnostic {
        let found = self.peek().map(|t| format!("'{}'", t.text)).unwrap_or_else(|| "end of input".into());
        let list = what.iter().map(|w| format!("'{w}'")).collect::<Vec<_>>().join(", ");
        Diagnostic::error(Code::Syntax, format!("expected one of {{{list}}}, found {found}")).at(self.cur_span())
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.peek_is(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> PResult<Span> {
        if self.peek_is(text) {
            Ok(self.bump().span)
        } else {
            Err(self.expected(&[text]))
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok((t.text.clone(), t.span))
            }
            _ => Err(self.expected(&["identifier"])),
        }
    }

    fn check_unsupported_keyword(&self) -> PResult<()> {
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Keyword && UNSUPPORTED_ITEMS.contains(&t.text.as_str()) {
                return Err(unsupported(&t.text, t.span));
            }
        }
        Ok(())
    }

    fn module(&mut self) -> PResult<Module> {
        let start = self.expect("module")?;
        let (name, _) = self.ident()?;
        let mut params = Vec::new();
        let mut ports = Vec::new();
        if self.eat("#") {
            self.expect("(")?;
            if !self.peek_is(")") {
                loop {
                    self.eat("parameter");
                    let (pname, pspan) = self.ident()?;
                    self.expect("=")?;
                    let value = self.expr()?;
                    params.push(Param { name: pname, value, local: false, span: pspan.join(self.prev_span()) });
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(")")?;
        }
        if self.eat("(") {
            if !self.peek_is(")") {
                self.port_list(&mut ports)?;
            }
            self.expect(")")?;
        }
        self.expect(";")?;
        let mut items = Vec::new();
        while !self.peek_is("endmodule") {
            if self.at_end() {
                return Err(self.expected(&["endmodule"]));
            }
            self.item(&mut items)?;
        }
        let end = self.expect("endmodule")?;
        Ok(Module { name, span: start.join(end), params, ports, items })
    }

    fn port_list(&mut self, ports: &mut Vec<PortDecl>) -> PResult<()> {
        let mut current: Option<(Direction, NetKind, Option<Range>)> = None;
        loop {
            self.check_unsupported_keyword()?;
            let start = self.cur_span();
            let dir = if self.eat("input") {
                Some(Direction::Input)
            } else if self.eat("output") {
                Some(Direction::Output)
            } else {
                None
            };
            if let Some(dir) = dir {
                self.check_unsupported_keyword()?;
                let kind = if self.eat("reg") {
                    NetKind::Reg
                } else {
                    self.eat("wire");
                    NetKind::Wire
                };
                self.check_unsupported_keyword()?;
                let range = self.opt_range()?;
                current = Some((dir, kind, range));
            } else if current.is_none() {
                return Err(unsupported("non-ANSI port list", start));
            }
            let (name, nspan) = self.ident()?;
            let (dir, kind, range) = current.clone().expect("direction set above");
            ports.push(PortDecl { name, dir, kind, range, span: start.join(nspan) });
            if !self.eat(",") {
                return Ok(());
            }
        }
    }

    fn opt_range(&mut self) -> PResult<Option<Range>> {
        if !self.eat("[") {
            return Ok(None);
        }
        let msb = self.expr()?;
        self.expect(":")?;
        let lsb = self.expr()?;
        self.expect("]")?;
        Ok(Some(Range { msb, lsb }))
    }

    fn item(&mut self, items: &mut Vec<Item>) -> PResult<()> {
        self.check_unsupported_keyword()?;
        let tok = self.peek().expect("not at end");
        let start = tok.span;
        match tok.text.as_str() {
            "input" | "output" if tok.kind == TokenKind::Keyword => {
                Err(unsupported("non-ANSI port declaration", start))
            }
            "wire" | "reg" if tok.kind == TokenKind::Keyword => {
                self.pos += 1;
                let kind = if tok.text == "reg" { NetKind::Reg } else { NetKind::Wire };
                self.check_unsupported_keyword()?;
                let range = self.opt_range()?;
                loop {
                    let (name, nspan) = self.ident()?;
                    items.push(Item::Net(NetDecl { name: name.clone(), kind, range: range.clone(), span: start.join(nspan) }));
                    if self.peek_is("=") {
                        if kind == NetKind::Reg {
                            return Err(unsupported("reg initializer", self.cur_span()));
                        }
                        self.pos += 1;
                        let expr = self.expr()?;
                        let span = nspan.join(expr.span);
                        items.push(Item::Assign(ContAssign { target: name, target_span: nspan, expr, span }));
                    }
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")?;
                Ok(())
            }
            "parameter" | "localparam" if tok.kind == TokenKind::Keyword => {
                self.pos += 1;
                let local = tok.text == "localparam";
                if self.peek_is("[") {
                    self.opt_range()?;
                }
                loop {
                    let (name, nspan) = self.ident()?;
                    self.expect("=")?;
                    let value = self.expr()?;
                    let span = nspan.join(value.span);
                    items.push(Item::Param(Param { name, value, local, span }));
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")?;
                Ok(())
            }
            "assign" if tok.kind == TokenKind::Keyword => {
                self.pos += 1;
                loop {
                    let (target, target_span) = self.lvalue()?;
                    self.expect("=")?;
                    let expr = self.expr()?;
                    let span = start.join(expr.span);
                    items.push(Item::Assign(ContAssign { target, target_span, expr, span }));
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")?;
                Ok(())
            }
            "always" if tok.kind == TokenKind::Keyword => {
                self.pos += 1;
                self.expect("@")?;
                let sensitivity = if self.eat("*") {
                    Sensitivity::Star
                } else {
                    self.expect("(")?;
                    let s = if self.eat("*") {
                        Sensitivity::Star
                    } else if self.peek_is("posedge") {
                        self.pos += 1;
                        let (clock, span) = self.ident()?;
                        if self.peek_is("or") || self.peek_is(",") {
                            return Err(unsupported("asynchronous reset", self.cur_span()));
                        }
                        Sensitivity::Posedge { clock, span }
                    } else if self.peek_is("negedge") {
                        return Err(unsupported("negedge", self.cur_span()));
                    } else {
                        return Err(unsupported("explicit sensitivity list", self.cur_span()));
                    };
                    self.expect(")")?;
                    s
                };
                let body = self.stmt()?;
                let span = start.join(body.span);
                items.push(Item::Always(Always { sensitivity, body, span }));
                Ok(())
            }
            _ if tok.kind == TokenKind::Identifier => {
                self.pos += 1;
                let module = tok.text.clone();
                if self.peek_is("#") {
                    return Err(unsupported("parameter override", self.cur_span()));
                }
                let (name, _) = self.ident()?;
                self.expect("(")?;
                let mut bindings = Vec::new();
                if !self.peek_is(")") {
                    loop {
                        let bstart = self.cur_span();
                        if !self.eat(".") {
                            return Err(unsupported("positional port binding", bstart));
                        }
                        let (port, _) = self.ident()?;
                        self.expect("(")?;
                        let expr = if self.peek_is(")") { None } else { Some(self.expr()?) };
                        let end = self.expect(")")?;
                        bindings.push(Binding { port, expr, span: bstart.join(end) });
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect(")")?;
                let end = self.expect(";")?;
                items.push(Item::Instance(Instance { module, name, bindings, span: start.join(end) }));
                Ok(())
            }
            _ => Err(self.expected(&["wire", "reg", "parameter", "localparam", "assign", "always", "endmodule", "identifier"])),
        }
    }

    fn lvalue(&mut self) -> PResult<(String, Span)> {
        if self.peek_is("{") {
            return Err(unsupported("concatenation target", self.cur_span()));
        }
        let (name, span) = self.ident()?;
        if self.peek_is("[") {
            return Err(unsupported("bit-select target", self.cur_span()));
        }
        Ok((name, span))
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        self.check_unsupported_keyword()?;
        let start = self.cur_span();
        if self.eat(";") {
            return Ok(Stmt { kind: StmtKind::Empty, span: start });
        }
        if self.eat("begin") {
            if self.eat(":") {
                self.ident()?;
            }
            let mut body = Vec::new();
            while !self.peek_is("end") {
                if self.at_end() {
                    return Err(self.expected(&["end"]));
                }
                body.push(self.stmt()?);
            }
            let end = self.expect("end")?;
            return Ok(Stmt { kind: StmtKind::Block(body), span: start.join(end) });
        }
        if self.eat("if") {
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let then = Box::new(self.stmt()?);
            let els = if self.eat("else") { Some(Box::new(self.stmt()?)) } else { None };
            let end = els.as_ref().map(|e| e.span).unwrap_or(then.span);
            return Ok(Stmt { kind: StmtKind::If { cond, then, els }, span: start.join(end) });
        }
        if self.peek_is("casez") || self.peek_is("casex") {
            return Err(unsupported(&self.peek().unwrap().text, start));
        }
        if self.eat("case") {
            self.expect("(")?;
            let selector = self.expr()?;
            self.expect(")")?;
            let mut items = Vec::new();
            let mut default = None;
            while !self.peek_is("endcase") {
                if self.at_end() {
                    return Err(self.expected(&["endcase"]));
                }
                let istart = self.cur_span();
                if self.eat("default") {
                    self.eat(":");
                    let body = self.stmt()?;
                    if default.is_some() {
                        return Err(Diagnostic::error(Code::Syntax, "case has more than one default").at(istart));
                    }
                    default = Some(Box::new(body));
                    continue;
                }
                let mut labels = vec![self.expr()?];
                while self.eat(",") {
                    labels.push(self.expr()?);
                }
                self.expect(":")?;
                let body = self.stmt()?;
                let span = istart.join(body.span);
                items.push(CaseItem { labels, body, span });
            }
            let end = self.expect("endcase")?;
            return Ok(Stmt { kind: StmtKind::Case { selector, items, default }, span: start.join(end) });
        }
        if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
            let (target, target_span) = self.lvalue()?;
            let blocking = if self.eat("=") {
                true
            } else if self.eat("<=") {
                false
            } else {
                return Err(self.expected(&["=", "<="]));
            };
            let expr = self.expr()?;
            let end = self.expect(";")?;
            return Ok(Stmt { kind: StmtKind::Assign { target, target_span, blocking, expr }, span: start.join(end) });
        }
        Err(self.expected(&["begin", "if", "case", "identifier", ";"]))
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let cond = self.binary(1)?;
        if self.eat("?") {
            let a = self.expr()?;
            self.expect(":")?;
            let b = self.expr()?;
            let span = cond.span.join(b.span);
            return Ok(Expr::new(ExprKind::Ternary(Box::new(cond), Box::new(a), Box::new(b)), span));
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(tok) = self.peek() {
            if tok.kind != TokenKind::Operator {
                break;
            }
            if matches!(tok.text.as_str(), "===" | "!==" | "**" | "/" | "%" | "<<<" | ">>>" | "~&" | "~|" | "~^" | "^~") {
                return Err(unsupported(&format!("operator {}", tok.text), tok.span));
            }
            let Some(op) = BinaryOp::from_symbol(&tok.text) else { break };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.cur_span();
        let op = match self.peek().map(|t| (t.kind.clone(), t.text.as_str())) {
            Some((TokenKind::Operator, "~")) => Some(UnaryOp::BitNot),
            Some((TokenKind::Operator, "!")) => Some(UnaryOp::LogNot),
            Some((TokenKind::Operator, "&")) => Some(UnaryOp::RedAnd),
            Some((TokenKind::Operator, "|")) => Some(UnaryOp::RedOr),
            Some((TokenKind::Operator, "^")) => Some(UnaryOp::RedXor),
            Some((TokenKind::Operator, t @ ("-" | "+" | "~&" | "~|" | "~^" | "^~"))) => {
                return Err(unsupported(&format!("unary operator {t}"), start));
            }
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let operand = self.unary()?;
            let span = start.join(operand.span);
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(operand)), span));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let Some(tok) = self.peek() else {
            return Err(self.expected(&["expression"]));
        };
        let start = tok.span;
        match &tok.kind {
            TokenKind::SizedLiteral { width, value } => {
                self.pos += 1;
                Ok(Expr::new(ExprKind::Literal { width: Some(*width), value: *value }, start))
            }
            TokenKind::UnsizedLiteral { value } => {
                self.pos += 1;
                Ok(Expr::new(ExprKind::Literal { width: None, value: *value }, start))
            }
            TokenKind::Identifier => {
                self.pos += 1;
                let name = tok.text.clone();
                if self.peek_is("(") {
                    return Err(unsupported("function call", start));
                }
                if self.eat("[") {
                    let msb = self.expr()?;
                    let lsb = if self.eat(":") {
                        Some(Box::new(self.expr()?))
                    } else if self.peek_is("+") && self.nth_is(1, ":") || self.peek_is("-") && self.nth_is(1, ":") {
                        return Err(unsupported("indexed part-select", self.cur_span()));
                    } else {
                        None
                    };
                    let end = self.expect("]")?;
                    if self.peek_is("[") {
                        return Err(unsupported("multi-dimensional select", self.cur_span()));
                    }
                    return Ok(Expr::new(ExprKind::Select { name, msb: Box::new(msb), lsb }, start.join(end)));
                }
                Ok(Expr::new(ExprKind::Ident(name), start))
            }
            TokenKind::Punctuation if tok.text == "(" => {
                self.pos += 1;
                let mut inner = self.expr()?;
                let end = self.expect(")")?;
                // Parentheses are not kept as nodes; the span grows to cover them.
                inner.span = start.join(end);
                Ok(inner)
            }
            TokenKind::Punctuation if tok.text == "{" => {
                self.pos += 1;
                let first = self.expr()?;
                if self.peek_is("{") {
                    return Err(unsupported("replication", self.cur_span()));
                }
                let mut items = vec![first];
                while self.eat(",") {
                    items.push(self.expr()?);
                }
                let end = self.expect("}")?;
                Ok(Expr::new(ExprKind::Concat(items), start.join(end)))
            }
            _ => Err(self.expected(&["identifier", "literal", "(", "{"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(src: &str) -> Vec<Item> {
        let ast = parse_source(&format!("module t(input a, input b, input c, output y);\n{src}\nendmodule")).unwrap();
        ast.modules.into_iter().next().unwrap().items
    }

    fn first_assign_expr(src: &str) -> Expr {
        match body(src).into_iter().next().unwrap() {
            Item::Assign(a) => a.expr,
            other => panic!("{other:?}"),
        }
    }

    fn shape(e: &Expr) -> String {
        match &e.kind {
            ExprKind::Ident(n) => n.clone(),
            ExprKind::Literal { value, .. } => value.to_string(),
            ExprKind::Unary(op, x) => format!("{op:?}({})", shape(x)),
            ExprKind::Binary(op, l, r) => format!("{op:?}({},{})", shape(l), shape(r)),
            ExprKind::Ternary(c, a, b) => format!("?({},{},{})", shape(c), shape(a), shape(b)),
            ExprKind::Concat(xs) => format!("{{{}}}", xs.iter().map(shape).collect::<Vec<_>>().join(",")),
            ExprKind::Select { name, .. } => format!("{name}[]"),
            ExprKind::Slice { .. } => "slice".into(),
        }
    }

    #[test]
    fn and_binds_tighter_than_or() {
        assert_eq!(shape(&first_assign_expr("assign y = a & b | c;")), "BitOr(BitAnd(a,b),c)");
        assert_eq!(shape(&first_assign_expr("assign y = a | b & c;")), "BitOr(a,BitAnd(b,c))");
    }

    #[test]
    fn precedence_table() {
        let cases = [
            ("a || b && c", "LogOr(a,LogAnd(b,c))"),
            ("a | b ^ c", "BitOr(a,BitXor(b,c))"),
            ("a ^ b & c", "BitXor(a,BitAnd(b,c))"),
            ("a & b == c", "BitAnd(a,Eq(b,c))"),
            ("a == b < c", "Eq(a,Lt(b,c))"),
            ("a < b << c", "Lt(a,Shl(b,c))"),
            ("a << b + c", "Shl(a,Add(b,c))"),
            ("a + b * c", "Add(a,Mul(b,c))"),
            ("a - b - c", "Sub(Sub(a,b),c)"),
            ("~a & b", "BitAnd(BitNot(a),b)"),
            ("a ? b : c ? a : b", "?(a,b,?(c,a,b))"),
            ("a || b ? c : a", "?(LogOr(a,b),c,a)"),
            ("(a | b) & c", "BitAnd(BitOr(a,b),c)"),
            ("{a, b & c}", "{a,BitAnd(b,c)}"),
            ("&a | ^b", "BitOr(RedAnd(a),RedXor(b))"),
        ];
        for (src, want) in cases {
            assert_eq!(shape(&first_assign_expr(&format!("assign y = {src};"))), want, "{src}");
        }
    }

    #[test]
    fn minimal_module() {
        let ast = parse_source("module m; endmodule").unwrap();
        assert_eq!(ast.modules.len(), 1);
        let m = &ast.modules[0];
        assert_eq!(m.name, "m");
        assert!(m.ports.is_empty() && m.items.is_empty() && m.params.is_empty());
    }

    #[test]
    fn initial_is_unsupported() {
        let err = parse_source("module m; initial begin end endmodule").unwrap_err();
        assert_eq!(err[0].code, Code::Unsupported);
        assert!(err[0].message.contains("initial"));
    }

    #[test]
    fn other_unsupported_constructs() {
        let cases = [
            ("module m(input clk); always @(posedge clk or posedge r) ; endmodule", "asynchronous reset"),
            ("module m(a); endmodule", "non-ANSI"),
            ("module m; assign y = a / b; endmodule", "/"),
            ("module m; assign y = -a; endmodule", "unary"),
            ("module m; assign y = {2{a}}; endmodule", "replication"),
            ("module m; child #(.W(2)) u(); endmodule", "parameter override"),
            ("module m; child u(a); endmodule", "positional"),
            ("module m; always @(a) ; endmodule", "sensitivity"),
            ("module m; assign y[0] = a; endmodule", "bit-select target"),
            ("module m; function f; endfunction endmodule", "function"),
        ];
        for (src, what) in cases {
            let err = parse_source(src).unwrap_err();
            assert_eq!(err[0].code, Code::Unsupported, "{src}");
            assert!(err[0].message.contains(what), "{src}: {}", err[0].message);
        }
    }

    #[test]
    fn syntax_error_lists_expected() {
        let err = parse_source("module m; assign y = a & ; endmodule").unwrap_err();
        assert_eq!(err[0].code, Code::Syntax);
        assert!(err[0].message.contains("expected"), "{}", err[0].message);
        let err = parse_source("module m(input a) endmodule").unwrap_err();
        assert!(err[0].message.contains("';'"));
    }

    #[test]
    fn ansi_ports_inherit_direction() {
        let ast = parse_source("module m(input [3:0] a, b, output reg [1:0] q, output y); endmodule").unwrap();
        let ports = &ast.modules[0].ports;
        assert_eq!(ports.len(), 4);
        assert_eq!(ports[1].dir, Direction::Input);
        assert!(ports[1].range.is_some());
        assert_eq!(ports[2].kind, NetKind::Reg);
        assert_eq!(ports[3].kind, NetKind::Wire);
        assert!(ports[3].range.is_none());
    }

    #[test]
    fn statements() {
        let items = body(
            "reg r;\nalways @(*) begin\n  if (a) r = b; else if (c) r = a; else r = 0;\nend\n\
             always @(posedge a) case (b) 0, 1: r <= c; default: r <= a; endcase\n\
             child u (.x(a & b), .y());",
        );
        assert_eq!(items.len(), 4);
        let Item::Always(al) = &items[1] else { panic!() };
        assert_eq!(al.sensitivity, Sensitivity::Star);
        let StmtKind::Block(stmts) = &al.body.kind else { panic!() };
        let StmtKind::If { els: Some(els), .. } = &stmts[0].kind else { panic!() };
        assert!(matches!(els.kind, StmtKind::If { .. }));
        let Item::Always(ff) = &items[2] else { panic!() };
        let StmtKind::Case { items: arms, default, .. } = &ff.body.kind else { panic!() };
        assert_eq!(arms[0].labels.len(), 2);
        assert!(default.is_some());
        let Item::Instance(inst) = &items[3] else { panic!() };
        assert_eq!(inst.bindings.len(), 2);
        assert!(inst.bindings[1].expr.is_none());
    }

    #[test]
    fn spans_cover_constructs() {
        let src = "module m(input a, input b, output y);\n  assign y = (a & b) | a;\nendmodule";
        let ast = parse_source(src).unwrap();
        let Item::Assign(a) = &ast.modules[0].items[0] else { panic!() };
        assert_eq!(a.span.slice(src), "assign y = (a & b) | a");
        assert_eq!(a.expr.span.slice(src), "(a & b) | a");
        let ExprKind::Binary(_, l, _) = &a.expr.kind else { panic!() };
        assert_eq!(l.span.slice(src), "(a & b)");
        assert_eq!(ast.modules[0].span.slice(src), src);
    }

    #[test]
    fn deterministic() {
        let src = "module m(input a, output y); assign y = ~a; endmodule";
        assert_eq!(parse_source(src).unwrap(), parse_source(src).unwrap());
    }
}
