//! Exact statevector simulation: gates, oracles, post-selected projections,
//! sampling and diagonal expectations.

mod gate;
mod state;

pub use gate::{
    dump_json, inverse_sequence, read_register, Gate, GateKind, GateRecord, Instruction, Oracle,
    PhaseFn,
};
pub use state::{basis_string, Statevector, MAX_QUBITS, POSTSELECT_CUTOFF};
