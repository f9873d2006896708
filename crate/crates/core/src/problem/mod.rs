//! Constrained binary problems, the cargo-loading instance, QUBO/Ising
//! compilation with binary slack, and the brute-force oracle.

mod model;
mod qubo;

pub use model::{
    brute_force_solve, cargo_instance, BruteForce, ConstrainedBinaryProblem, Constraint,
    Representation, RepresentationAssignment, MAX_BRUTE_FORCE_VARS,
};
pub use qubo::{
    compile_qubo, default_lambda, qubo_to_ising, slack_width, IsingCoeffs, Multipliers, Qubo,
};
