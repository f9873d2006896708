//! Hybrid circuit assembly: phase return, penalty dephasing and Zeno layers,
//! block ordering, Zeno-feasible initial states, and complexity statistics.

mod circuit;
mod layers;
mod stats;
#[cfg(test)]
mod tests;

pub use circuit::{
    build_circuit, prepare_initial_state, Block, BlockOrdering, HybridCircuit, LayerParams,
    QubitLayout,
};
pub use layers::{
    build_dephasing_layer, build_phase_return, build_zeno_filter, build_zeno_layer,
    phase_return_oracle,
};
pub use stats::{circuit_stats, composite_stats, ops_stats, CircuitStats};
