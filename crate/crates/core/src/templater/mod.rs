mod lower;
pub mod symbols;

pub use lower::{lower_module, lower_single, resize};
pub use symbols::{symbol_for, SymbolTable};
