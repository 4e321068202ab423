//! Hand-written reference designs bundled with the library.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Design {
    pub name: &'static str,
    /// Module to lower when the file holds several.
    pub top: &'static str,
    pub source: &'static str,
    pub sequential: bool,
}

macro_rules! design {
    ($name:literal, $top:literal, $seq:literal) => {
        Design { name: $name, top: $top, source: include_str!(concat!("../corpus/", $name, ".v")), sequential: $seq }
    };
}

pub const DESIGNS: &[Design] = &[
    design!("full_adder", "full_adder", false),
    design!("ripple_adder4", "ripple_adder4", false),
    design!("mux2", "mux2", false),
    design!("mux4", "mux4", false),
    design!("priority_encoder", "priority_encoder", false),
    design!("majority3", "majority3", false),
    design!("alu_slice", "alu_slice", false),
    design!("counter2", "counter2", true),
    design!("counter4", "counter4", true),
    design!("traffic_light", "traffic_light", true),
    design!("dual_counter", "dual_counter", true),
    design!("hier_top", "hier_top", false),
];

pub fn get(name: &str) -> Option<&'static Design> {
    DESIGNS.iter().find(|d| d.name == name)
}
