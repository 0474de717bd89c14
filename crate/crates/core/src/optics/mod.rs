//! Optical realization of the controlled `Z^l X^m` gates on an OAM qudit.
//!
//! Gates are compiled into spiral phase plates, OAM sorters and Dove-prism
//! pairs acting on an OAM window `[0, 2d)` times `d` spatial modes, then
//! checked against the abstract gate by direct simulation.

pub mod compile;
pub mod elements;
pub mod mzi;
pub mod simulate;

pub use compile::{
    compile_xm, compile_zlxm, compile_zlxm_with_layout, Layout, OpticalPlan, ResourceTally,
};
pub use elements::{
    dove_pair_unitary, sorter_inverse_unitary, sorter_unitary, spp_unitary, BeamsplitterConvention,
    ElementKind, OpticalElement, OpticalSpace,
};
pub use mzi::{simulate_mzi, simulate_mzi_compiled, simulate_mzi_with};
pub use simulate::{
    simulate_plan, verify_gate_equivalence, verify_plan, GateVerdict, OamModeState, GATE_TOL,
};
