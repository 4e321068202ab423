use crate::diag::{Code, Diagnostic, Span};

/// Widest value the two-valued simulator carries.
pub const MAX_WIDTH: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Identifier,
    SizedLiteral { width: u32, value: u64 },
    UnsizedLiteral { value: u64 },
    Operator,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        matches!(self.kind, TokenKind::Keyword | TokenKind::Operator | TokenKind::Punctuation)
            && self.text == text
    }
}

pub const KEYWORDS: &[&str] = &[
    "module", "endmodule", "input", "output", "inout", "wire", "reg", "parameter", "localparam",
    "assign", "always", "posedge", "negedge", "or", "begin", "end", "if", "else", "case", "casez",
    "casex", "endcase", "default", "initial", "generate", "endgenerate", "function",
    "endfunction", "task", "endtask", "integer", "genvar", "for", "while", "forever", "repeat",
    "signed", "logic", "always_ff", "always_comb",
];

// Longest match first.
const OPERATORS: &[&str] = &[
    "===", "!==", "<<<", ">>>", "**", "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "~&", "~|",
    "~^", "^~", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=", "?", ":",
];

const PUNCTUATION: &[char] = &['(', ')', '[', ']', '{', '}', ';', ',', '.', '#', '@'];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }
}

/// Split HDL source into tokens. Whitespace and comments are discarded.
pub fn tokenize(source: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut cur = Cursor { src: source, pos: 0, line: 1, col: 1 };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    while let Some(c) = cur.peek() {
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let span_to = |cur: &Cursor| Span::new(start, cur.pos - start, line, col);

        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if cur.rest().starts_with("//") {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if cur.rest().starts_with("/*") {
            cur.bump();
            cur.bump();
            let mut closed = false;
            while cur.peek().is_some() {
                if cur.rest().starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    closed = true;
                    break;
                }
                cur.bump();
            }
            if !closed {
                diags.push(
                    Diagnostic::error(Code::LexComment, "unterminated block comment")
                        .at(Span::new(start, 2, line, col)),
                );
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '$') {
                cur.bump();
            }
            let text = &source[start..cur.pos];
            let kind = if KEYWORDS.contains(&text) { TokenKind::Keyword } else { TokenKind::Identifier };
            tokens.push(Token { kind, text: text.to_string(), span: span_to(&cur) });
            continue;
        }
        if c.is_ascii_digit() || (c == '\'' && cur.peek_at(1).is_some_and(|b| "bBoOdDhHsS".contains(b))) {
            match lex_number(&mut cur) {
                Ok(kind) => tokens.push(Token {
                    kind,
                    text: source[start..cur.pos].to_string(),
                    span: span_to(&cur),
                }),
                Err(msg) => diags.push(Diagnostic::error(Code::LexLiteral, msg).at(span_to(&cur))),
            }
            continue;
        }
        if let Some(op) = OPERATORS.iter().find(|op| cur.rest().starts_with(**op)) {
            for _ in 0..op.len() {
                cur.bump();
            }
            tokens.push(Token { kind: TokenKind::Operator, text: op.to_string(), span: span_to(&cur) });
            continue;
        }
        if PUNCTUATION.contains(&c) {
            cur.bump();
            tokens.push(Token { kind: TokenKind::Punctuation, text: c.to_string(), span: span_to(&cur) });
            continue;
        }
        cur.bump();
        diags.push(
            Diagnostic::error(Code::LexChar, format!("illegal character {c:?}")).at(span_to(&cur)),
        );
    }

    if diags.is_empty() {
        Ok(tokens)
    } else {
        Err(diags)
    }
}

fn lex_number(cur: &mut Cursor) -> Result<TokenKind, String> {
    let mut size_digits = String::new();
    while let Some(c) = cur.peek() {
        if c.is_ascii_digit() || (c == '_' && !size_digits.is_empty()) {
            size_digits.push(c);
            cur.bump();
        } else {
            break;
        }
    }
    if cur.peek() != Some('\'') {
        let value = parse_digits(&size_digits, 10)?;
        return Ok(TokenKind::UnsizedLiteral { value });
    }
    cur.bump();
    if matches!(cur.peek(), Some('s' | 'S')) {
        cur.bump();
        consume_digits(cur);
        return Err("signed literals are not supported".into());
    }
    let radix = match cur.bump() {
        Some('b' | 'B') => 2,
        Some('o' | 'O') => 8,
        Some('d' | 'D') => 10,
        Some('h' | 'H') => 16,
        _ => return Err("expected base specifier after '".into()),
    };
    let digits = consume_digits(cur);
    if digits.is_empty() {
        return Err("missing digits after base specifier".into());
    }
    if digits.chars().any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?')) {
        return Err("x/z digits are not supported by two-valued semantics".into());
    }
    let value = parse_digits(&digits, radix)?;
    if size_digits.is_empty() {
        return Ok(TokenKind::UnsizedLiteral { value });
    }
    let width = parse_digits(&size_digits, 10)?;
    if width == 0 {
        return Err("literal width must be at least 1".into());
    }
    if width > MAX_WIDTH as u64 {
        return Err(format!("literal width {width} exceeds {MAX_WIDTH}"));
    }
    let width = width as u32;
    if width < 64 && value >> width != 0 {
        return Err(format!("value {value} does not fit in {width} bits"));
    }
    Ok(TokenKind::SizedLiteral { width, value })
}

fn consume_digits(cur: &mut Cursor) -> String {
    let mut out = String::new();
    while let Some(c) = cur.peek() {
        if c.is_ascii_alphanumeric() || c == '_' || c == '?' {
            out.push(c);
            cur.bump();
        } else {
            break;
        }
    }
    out
}

fn parse_digits(digits: &str, radix: u32) -> Result<u64, String> {
    let mut value: u128 = 0;
    for c in digits.chars().filter(|c| *c != '_') {
        let d = c.to_digit(radix).ok_or_else(|| format!("invalid digit {c:?} for base {radix}"))?;
        value = value * radix as u128 + d as u128;
        if value > u64::MAX as u128 {
            return Err("literal value exceeds 64 bits".into());
        }
    }
    Ok(value as u64)
}
