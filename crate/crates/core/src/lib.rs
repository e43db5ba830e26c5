//! Exact first- and second-order subdifferentials of convex piecewise linear
//! functions, their linear reductions, and full-stability certificates for
//! composite and constrained minimax problems.

pub mod cli;
pub mod cpwl_core;
pub mod error;
pub mod minimax;
pub mod oracle;
pub mod ratlin;
pub mod reduction;
pub mod second_order;
pub mod stability;

pub use error::{Error, ErrorClass, Result};
