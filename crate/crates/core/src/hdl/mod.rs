pub mod ast;
pub mod elab;
pub mod lexer;
pub mod parser;

pub use ast::HdlAst;
pub use elab::{elaborate, ElaboratedDesign};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse, parse_source};
