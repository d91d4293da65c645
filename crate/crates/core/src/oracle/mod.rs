//! Independent verification machinery for the node solvers.
//!
//! [`check_solution`] evaluates a flow allocation against the node model's
//! constraint families and reports per-constraint status. For tiny instances
//! [`grid_optimal_flow`] brute-forces the maximal total flow so solver
//! optimality can be cross-checked, and [`bliemer_reference`] implements the
//! demand-proportional allocation rule that the priority-based model is
//! compared against.

mod bliemer;
mod checker;
mod grid;
mod trace_check;

pub use bliemer::bliemer_reference;
pub use checker::{check_solution, ConstraintCheck, ConstraintKind, ConstraintReport};
pub use grid::{grid_optimal_flow, GridOptimum};
pub use trace_check::{verify_trace, TraceVerification};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error("dimension mismatch between spec and solution: {0}")]
    DimensionMismatch(String),
    #[error("instance too large for the brute-force oracle: {0}")]
    TooLarge(String),
    #[error("oracle does not support this instance: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Node(#[from] crate::node::NodeError),
}
