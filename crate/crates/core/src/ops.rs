//! Operator codes, width rules and two-valued evaluation.
//!
//! Both simulators and the emitter go through this module so that the HDL and
//! graph views of a design agree on every operator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hdl::ast::{BinaryOp, UnaryOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Opcode {
    BitAnd,
    BitOr,
    BitXor,
    BitNot,
    LogAnd,
    LogOr,
    LogNot,
    RedAnd,
    RedOr,
    RedXor,
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
    Concat,
    Slice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticClass {
    Bitwise,
    Logical,
    Arithmetic,
    Comparison,
    Reduction,
    Structural,
}

/// Operand count accepted by an opcode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Exactly(usize),
    AtLeast(usize),
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Exactly(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }
}

impl Opcode {
    pub const ALL: &'static [Opcode] = &[
        Opcode::BitAnd,
        Opcode::BitOr,
        Opcode::BitXor,
        Opcode::BitNot,
        Opcode::LogAnd,
        Opcode::LogOr,
        Opcode::LogNot,
        Opcode::RedAnd,
        Opcode::RedOr,
        Opcode::RedXor,
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::Shl,
        Opcode::Shr,
        Opcode::Eq,
        Opcode::Ne,
        Opcode::Lt,
        Opcode::Le,
        Opcode::Gt,
        Opcode::Ge,
        Opcode::Concat,
        Opcode::Slice,
    ];

    pub fn class(self) -> SemanticClass {
        use Opcode::*;
        match self {
            BitAnd | BitOr | BitXor | BitNot => SemanticClass::Bitwise,
            LogAnd | LogOr | LogNot => SemanticClass::Logical,
            RedAnd | RedOr | RedXor => SemanticClass::Reduction,
            Add | Sub | Mul | Shl | Shr => SemanticClass::Arithmetic,
            Eq | Ne | Lt | Le | Gt | Ge => SemanticClass::Comparison,
            Concat | Slice => SemanticClass::Structural,
        }
    }

    pub fn arity(self) -> Arity {
        use Opcode::*;
        match self {
            BitAnd | BitOr | BitXor | LogAnd | LogOr => Arity::AtLeast(2),
            Concat => Arity::AtLeast(1),
            BitNot | LogNot | RedAnd | RedOr | RedXor | Shl | Shr | Slice => Arity::Exactly(1),
            Add | Sub | Mul | Eq | Ne | Lt | Le | Gt | Ge => Arity::Exactly(2),
        }
    }

    /// Opcodes whose nested applications are merged into one n-ary node.
    /// Only operators where zero-extension commutes with the operation
    /// qualify; `+` and `*` truncate at every level and are kept binary.
    pub fn is_flattenable(self) -> bool {
        matches!(self, Opcode::BitAnd | Opcode::BitOr | Opcode::BitXor | Opcode::LogAnd | Opcode::LogOr | Opcode::Concat)
    }

    pub fn from_binary(op: BinaryOp) -> Opcode {
        match op {
            BinaryOp::BitAnd => Opcode::BitAnd,
            BinaryOp::BitOr => Opcode::BitOr,
            BinaryOp::BitXor => Opcode::BitXor,
            BinaryOp::LogAnd => Opcode::LogAnd,
            BinaryOp::LogOr => Opcode::LogOr,
            BinaryOp::Add => Opcode::Add,
            BinaryOp::Sub => Opcode::Sub,
            BinaryOp::Mul => Opcode::Mul,
            BinaryOp::Shl => Opcode::Shl,
            BinaryOp::Shr => Opcode::Shr,
            BinaryOp::Eq => Opcode::Eq,
            BinaryOp::Ne => Opcode::Ne,
            BinaryOp::Lt => Opcode::Lt,
            BinaryOp::Le => Opcode::Le,
            BinaryOp::Gt => Opcode::Gt,
            BinaryOp::Ge => Opcode::Ge,
        }
    }

    pub fn from_unary(op: UnaryOp) -> Opcode {
        match op {
            UnaryOp::BitNot => Opcode::BitNot,
            UnaryOp::LogNot => Opcode::LogNot,
            UnaryOp::RedAnd => Opcode::RedAnd,
            UnaryOp::RedOr => Opcode::RedOr,
            UnaryOp::RedXor => Opcode::RedXor,
        }
    }

    /// Infix or prefix HDL spelling, where one exists.
    pub fn hdl_symbol(self) -> Option<&'static str> {
        use Opcode::*;
        Some(match self {
            BitAnd => "&",
            BitOr => "|",
            BitXor => "^",
            BitNot => "~",
            LogAnd => "&&",
            LogOr => "||",
            LogNot => "!",
            RedAnd => "&",
            RedOr => "|",
            RedXor => "^",
            Add => "+",
            Sub => "-",
            Mul => "*",
            Shl => "<<",
            Shr => ">>",
            Eq => "==",
            Ne => "!=",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Concat | Slice => return None,
        })
    }

    pub fn binary_op(self) -> Option<BinaryOp> {
        use Opcode::*;
        Some(match self {
            BitAnd => BinaryOp::BitAnd,
            BitOr => BinaryOp::BitOr,
            BitXor => BinaryOp::BitXor,
            LogAnd => BinaryOp::LogAnd,
            LogOr => BinaryOp::LogOr,
            Add => BinaryOp::Add,
            Sub => BinaryOp::Sub,
            Mul => BinaryOp::Mul,
            Shl => BinaryOp::Shl,
            Shr => BinaryOp::Shr,
            Eq => BinaryOp::Eq,
            Ne => BinaryOp::Ne,
            Lt => BinaryOp::Lt,
            Le => BinaryOp::Le,
            Gt => BinaryOp::Gt,
            Ge => BinaryOp::Ge,
            _ => return None,
        })
    }

    /// Result width from operand widths. `slice` carries (msb, lsb) for
    /// [`Opcode::Slice`]. Returns `None` when the operand list is invalid.
    pub fn result_width(self, inputs: &[u32], slice: Option<(u32, u32)>) -> Option<u32> {
        if !self.arity().accepts(inputs.len()) || inputs.contains(&0) {
            return None;
        }
        use Opcode::*;
        Some(match self {
            BitAnd | BitOr | BitXor | Add | Sub | Mul => *inputs.iter().max()?,
            BitNot | Shl | Shr => inputs[0],
            LogAnd | LogOr | LogNot | RedAnd | RedOr | RedXor | Eq | Ne | Lt | Le | Gt | Ge => 1,
            Concat => inputs.iter().sum(),
            Slice => {
                let (msb, lsb) = slice?;
                if msb < lsb || msb >= inputs[0] {
                    return None;
                }
                msb - lsb + 1
            }
        })
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Evaluate an opcode. `inputs` pairs each operand value with its width;
/// values are already masked to their widths. `param` is the shift amount for
/// shifts and `(msb, lsb)` packed as `msb << 32 | lsb` for slices.
pub fn eval(op: Opcode, inputs: &[(u64, u32)], out_width: u32, param: u64) -> u64 {
    use Opcode::*;
    let b = |x: bool| x as u64;
    let v = |i: usize| inputs[i].0;
    let raw = match op {
        BitAnd => inputs.iter().fold(u64::MAX, |acc, (x, _)| acc & x),
        BitOr => inputs.iter().fold(0, |acc, (x, _)| acc | x),
        BitXor => inputs.iter().fold(0, |acc, (x, _)| acc ^ x),
        BitNot => !v(0),
        LogAnd => b(inputs.iter().all(|(x, _)| *x != 0)),
        LogOr => b(inputs.iter().any(|(x, _)| *x != 0)),
        LogNot => b(v(0) == 0),
        RedAnd => b(v(0) == mask(inputs[0].1)),
        RedOr => b(v(0) != 0),
        RedXor => (v(0).count_ones() & 1) as u64,
        Add => v(0).wrapping_add(v(1)),
        Sub => v(0).wrapping_sub(v(1)),
        Mul => v(0).wrapping_mul(v(1)),
        Shl => {
            if param >= 64 {
                0
            } else {
                v(0) << param
            }
        }
        Shr => {
            if param >= 64 {
                0
            } else {
                v(0) >> param
            }
        }
        Eq => b(v(0) == v(1)),
        Ne => b(v(0) != v(1)),
        Lt => b(v(0) < v(1)),
        Le => b(v(0) <= v(1)),
        Gt => b(v(0) > v(1)),
        Ge => b(v(0) >= v(1)),
        Concat => {
            let mut acc: u64 = 0;
            for (x, w) in inputs {
                acc = if *w >= 64 { *x } else { (acc << w) | x };
            }
            acc
        }
        Slice => {
            let lsb = param & 0xffff_ffff;
            v(0) >> lsb
        }
    };
    raw & mask(out_width)
}

pub fn slice_param(msb: u32, lsb: u32) -> u64 {
    ((msb as u64) << 32) | lsb as u64
}

/// Minimal width holding `value` (at least 1). Unsized literals take this width.
pub fn min_width(value: u64) -> u32 {
    (64 - value.leading_zeros()).max(1)
}
