//! The time-stepping simulation loop.
//!
//! Each step applies control hooks, evaluates link send/receive functions,
//! completes any open split ratios, solves every node, forms boundary flows
//! and advances link states by conservation. All phase computations are pure
//! functions of the previous state, so links and nodes evaluate in parallel
//! with results identical for any worker count.

mod network;
mod step;

pub use network::{
    Diagnostic, Hook, InitialCondition, Link, Network, Node, Profile, Scenario, SplitEntry,
};
pub use step::{
    conservation_audit, run, run_with_threads, step, AuditReport, EngineError, NodeStepInfo,
    SimState, StepRecord, Trajectory,
};
