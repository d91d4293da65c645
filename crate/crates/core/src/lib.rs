//! Deterministic macroscopic simulation of multi-commodity traffic networks.
//!
//! The model discretizes kinematic-wave dynamics over links and nodes: links
//! carry per-commodity vehicle counts and an inverse-lambda fundamental
//! diagram with a congestion metastate; nodes allocate flows between input
//! and output links under demand, supply, priority and (relaxed) FIFO
//! constraints. Split ratios left open in a scenario are computed at runtime
//! so that output links stay as uniformly loaded as possible.
//!
//! * [`fd`], [`link`] — fundamental diagrams and single-link dynamics;
//! * [`node`] — the node flow solvers;
//! * [`assign`] — runtime split-ratio assignment;
//! * [`engine`] — the time-stepping simulation loop;
//! * [`oracle`] — independent verification machinery (constraint checker,
//!   brute-force optimizer, reference comparator).

pub mod assign;
pub mod engine;
pub mod fd;
pub mod link;
pub mod node;
pub mod oracle;

/// Absolute comparison tolerance, in vehicles, used by shape checks and
/// defensive guards throughout.
pub const TOLERANCE: f64 = 1e-9;

pub use fd::{normalize, FdError, FundamentalDiagram};
pub use link::{LinkError, LinkKind, LinkState, Supply};
pub use node::{
    solve_mimo_fifo, solve_mimo_relaxed, solve_mimo_relaxed_traced, solve_miso,
    solve_simo_relaxed, tampere_priorities, FlowSolution, NodeError, NodeSpec,
};
