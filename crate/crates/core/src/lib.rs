//! Conversion between a synthesizable HDL subset and a graphical
//! circuit-chart document, plus layout, rendering, emission and
//! equivalence checking.

pub mod corpus;
pub mod diag;
pub mod emit;
pub mod hdl;
pub mod ir;
pub mod layout;
pub mod ops;
pub mod sim;
pub mod svg;
pub mod templater;
