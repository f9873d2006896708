use thiserror::Error;

/// Errors raised across simulation, circuit construction and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A size limit was exceeded (qubits, variables, constraints, matrix dimension).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A gate or operator does not fit the state it is applied to.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Post-selection on an outcome whose probability is below the cutoff.
    #[error("post-selection annihilated the state (outcome probability {probability:.3e})")]
    EmptySubspace { probability: f64 },

    /// Register widths, weights or thresholds that cannot be laid out.
    #[error("layout error: {0}")]
    Layout(String),

    /// A precondition on the caller's data was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Statistics were requested for a circuit containing oracle gates.
    #[error("circuit statistics unavailable: {0}")]
    StatsUnavailable(String),

    /// Malformed user input (files, CLI arguments, parameter lists).
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
