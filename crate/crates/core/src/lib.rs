pub mod anneal;
pub mod arith;
pub mod builder;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod problem;
pub mod sim;
pub mod zeno;

pub use error::{Error, Result};
