//! The glyph table mapping operators and structural keywords to labels.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ops::{Opcode, SemanticClass};

pub const COND: &str = "条件";
pub const VALUE: &str = "值";
pub const OTHERWISE: &str = "否则";
pub const REGISTER: &str = "寄存";
pub const SELECT: &str = "选择";
pub const MODULE: &str = "模块";
pub const CONSTANT: &str = "常量";

const OPERATORS: &[(Opcode, &str)] = &[
    (Opcode::BitAnd, "位与"),
    (Opcode::BitOr, "位或"),
    (Opcode::BitXor, "位异或"),
    (Opcode::BitNot, "位非"),
    (Opcode::LogAnd, "逻辑与"),
    (Opcode::LogOr, "逻辑或"),
    (Opcode::LogNot, "逻辑非"),
    (Opcode::RedAnd, "缩与"),
    (Opcode::RedOr, "缩或"),
    (Opcode::RedXor, "缩异或"),
    (Opcode::Add, "加"),
    (Opcode::Sub, "减"),
    (Opcode::Mul, "乘"),
    (Opcode::Shl, "左移"),
    (Opcode::Shr, "右移"),
    (Opcode::Eq, "等"),
    (Opcode::Ne, "不等"),
    (Opcode::Lt, "小于"),
    (Opcode::Le, "不大于"),
    (Opcode::Gt, "大于"),
    (Opcode::Ge, "不小于"),
    (Opcode::Concat, "拼接"),
    (Opcode::Slice, "取位"),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymbolEntry {
    pub opcode: Opcode,
    pub class: SemanticClass,
    pub glyph: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymbolTable {
    pub operators: Vec<SymbolEntry>,
    pub keywords: BTreeMap<String, String>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        let operators =
            OPERATORS.iter().map(|(op, g)| SymbolEntry { opcode: *op, class: op.class(), glyph: g.to_string() }).collect();
        let keywords = [
            ("condition", COND),
            ("value", VALUE),
            ("default", OTHERWISE),
            ("register", REGISTER),
            ("select", SELECT),
            ("instance", MODULE),
            ("constant", CONSTANT),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        Self { operators, keywords }
    }
}

impl SymbolTable {
    /// Glyph for `op` in `class`.
    ///
    /// # Panics
    /// When the pair is not in the table; every opcode the frontend
    /// produces is present, so this is a programming error.
    pub fn symbol_for(&self, op: Opcode, class: SemanticClass) -> &str {
        self.operators
            .iter()
            .find(|e| e.opcode == op && e.class == class)
            .map(|e| e.glyph.as_str())
            .unwrap_or_else(|| panic!("no glyph for {op:?} in class {class:?}"))
    }

    pub fn glyph(&self, op: Opcode) -> &str {
        self.symbol_for(op, op.class())
    }
}

/// Glyph for `op` in `class` from the built-in table.
pub fn symbol_for(op: Opcode, class: SemanticClass) -> &'static str {
    OPERATORS
        .iter()
        .find(|(o, _)| *o == op && op.class() == class)
        .map(|(_, g)| *g)
        .unwrap_or_else(|| panic!("no glyph for {op:?} in class {class:?}"))
}

pub fn glyph(op: Opcode) -> &'static str {
    symbol_for(op, op.class())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn table_lookups() {
        assert_eq!(symbol_for(Opcode::BitOr, SemanticClass::Bitwise), "位或");
        assert_eq!(symbol_for(Opcode::LogOr, SemanticClass::Logical), "逻辑或");
        assert_eq!(symbol_for(Opcode::BitAnd, SemanticClass::Bitwise), "位与");
    }

    #[test]
    fn total_and_injective() {
        let glyphs: BTreeSet<&str> = Opcode::ALL.iter().map(|op| glyph(*op)).collect();
        assert_eq!(glyphs.len(), Opcode::ALL.len());
        for k in [COND, VALUE, OTHERWISE, REGISTER, SELECT, MODULE, CONSTANT] {
            assert!(!glyphs.contains(k));
        }
    }

    #[test]
    fn glyphs_are_short_cjk() {
        let t = SymbolTable::default();
        let all = t.operators.iter().map(|e| e.glyph.as_str()).chain(t.keywords.values().map(String::as_str));
        for g in all {
            let n = g.chars().count();
            assert!((1..=3).contains(&n), "{g}");
            assert!(g.chars().all(|c| ('\u{4e00}'..='\u{9fff}').contains(&c)), "{g}");
        }
    }

    #[test]
    #[should_panic]
    fn wrong_class_panics() {
        symbol_for(Opcode::BitOr, SemanticClass::Logical);
    }

    #[test]
    fn table_matches_free_functions() {
        let t = SymbolTable::default();
        for op in Opcode::ALL {
            assert_eq!(t.glyph(*op), glyph(*op));
        }
    }
}
