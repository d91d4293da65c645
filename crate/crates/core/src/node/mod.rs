//! Node flow solvers: allocation of multi-commodity input-output flows at a
//! junction for one timestep.
//!
//! Four solvers share one problem statement — maximize the total flow through
//! the node subject to demand, supply, commodity proportionality, (relaxed)
//! FIFO and input-priority constraints:
//!
//! * [`solve_miso`] — many inputs, one output;
//! * [`solve_mimo_fifo`] — general node, FIFO fully enforced;
//! * [`solve_simo_relaxed`] — one input, many outputs, FIFO relaxed through
//!   mutual restriction coefficients;
//! * [`solve_mimo_relaxed`] — the general solver; the other three are its
//!   special cases and are kept as independent reference paths.

mod miso;
mod mimo_fifo;
mod relaxed;
mod simo;
mod trace;

pub use miso::solve_miso;
pub use mimo_fifo::solve_mimo_fifo;
pub use relaxed::{solve_mimo_relaxed, solve_mimo_relaxed_traced};
pub use simo::solve_simo_relaxed;
pub use trace::{RoundBranch, SolveRound, SolveTrace};

use crate::TOLERANCE;
use thiserror::Error;

/// One node-solve instance: everything the solver needs for one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    /// Number of commodities C.
    pub commodities: usize,
    /// Demand (send function) per input link and commodity, M x C.
    pub demand: Vec<Vec<f64>>,
    /// Split ratios per input, output and commodity, M x N x C.
    pub split: Vec<Vec<Vec<f64>>>,
    /// Input link priorities, M entries, nonnegative.
    pub priorities: Vec<f64>,
    /// Supply (receive function) per output link, N entries.
    pub supply: Vec<f64>,
    /// Mutual restriction coefficients, M x N x N.
    ///
    /// `restriction[i][j][jp]` is the fraction of movement `(i, jp)` affected
    /// by a flow restriction in output `j`: 1 is full FIFO, 0 removes the
    /// coupling. The diagonal is fixed at 1.
    pub restriction: Vec<Vec<Vec<f64>>>,
}

impl NodeSpec {
    pub fn input_count(&self) -> usize {
        self.demand.len()
    }

    pub fn output_count(&self) -> usize {
        self.supply.len()
    }

    /// Total demand of input `i` across commodities.
    pub fn total_demand(&self, i: usize) -> f64 {
        self.demand[i].iter().sum()
    }

    /// Oriented demand `S_ij^c = beta_ij^c * S_i^c`.
    pub fn oriented_demand(&self, i: usize, j: usize, c: usize) -> f64 {
        self.split[i][j][c] * self.demand[i][c]
    }

    /// Total oriented demand of movement `(i, j)`.
    pub fn total_oriented_demand(&self, i: usize, j: usize) -> f64 {
        (0..self.commodities)
            .map(|c| self.oriented_demand(i, j, c))
            .sum()
    }

    /// All-ones restriction tensor (full FIFO) for an M x N node.
    pub fn full_fifo_restriction(inputs: usize, outputs: usize) -> Vec<Vec<Vec<f64>>> {
        vec![vec![vec![1.0; outputs]; outputs]; inputs]
    }

    /// Single-commodity convenience constructor with full FIFO.
    pub fn single_commodity(
        demand: &[f64],
        split: &[Vec<f64>],
        priorities: &[f64],
        supply: &[f64],
    ) -> Self {
        let m = demand.len();
        let n = supply.len();
        NodeSpec {
            commodities: 1,
            demand: demand.iter().map(|d| vec![*d]).collect(),
            split: split
                .iter()
                .map(|row| row.iter().map(|b| vec![*b]).collect())
                .collect(),
            priorities: priorities.to_vec(),
            supply: supply.to_vec(),
            restriction: Self::full_fifo_restriction(m, n),
        }
    }

    /// Checks the structural invariants of the instance.
    pub fn validate(&self) -> Result<(), NodeError> {
        let m = self.input_count();
        let n = self.output_count();
        let c = self.commodities;
        if m == 0 || n == 0 {
            return Err(NodeError::InvalidSpec(
                "a node needs at least one input and one output".into(),
            ));
        }
        if self.split.len() != m || self.priorities.len() != m || self.restriction.len() != m {
            return Err(NodeError::InvalidSpec("input dimension mismatch".into()));
        }
        for i in 0..m {
            if self.demand[i].len() != c {
                return Err(NodeError::InvalidSpec(format!(
                    "demand of input {i} has wrong commodity count"
                )));
            }
            if self.demand[i].iter().any(|d| !d.is_finite() || *d < 0.0) {
                return Err(NodeError::InvalidSpec(format!(
                    "demand of input {i} must be finite and nonnegative"
                )));
            }
            if self.split[i].len() != n {
                return Err(NodeError::InvalidSpec(format!(
                    "split ratios of input {i} have wrong output count"
                )));
            }
            for j in 0..n {
                if self.split[i][j].len() != c {
                    return Err(NodeError::InvalidSpec(format!(
                        "split ratios of movement ({i}, {j}) have wrong commodity count"
                    )));
                }
            }
            for cc in 0..c {
                let sum: f64 = (0..n).map(|j| self.split[i][j][cc]).sum();
                if (0..n).any(|j| self.split[i][j][cc] < -TOLERANCE) {
                    return Err(NodeError::InvalidSpec(format!(
                        "negative split ratio for input {i}, commodity {cc}"
                    )));
                }
                if self.demand[i][cc] > 0.0 && (sum - 1.0).abs() > 1e-6 {
                    return Err(NodeError::InvalidSpec(format!(
                        "split ratios of input {i}, commodity {cc} sum to {sum}, expected 1"
                    )));
                }
            }
            if self.restriction[i].len() != n {
                return Err(NodeError::InvalidSpec(format!(
                    "restriction matrix of input {i} has wrong shape"
                )));
            }
            for j in 0..n {
                if self.restriction[i][j].len() != n {
                    return Err(NodeError::InvalidSpec(format!(
                        "restriction matrix of input {i} has wrong shape"
                    )));
                }
                if (self.restriction[i][j][j] - 1.0).abs() > TOLERANCE {
                    return Err(NodeError::InvalidSpec(format!(
                        "restriction diagonal of input {i}, output {j} must be 1"
                    )));
                }
                for jp in 0..n {
                    let eta = self.restriction[i][j][jp];
                    if !(0.0..=1.0 + TOLERANCE).contains(&eta) {
                        return Err(NodeError::InvalidSpec(format!(
                            "restriction coefficient ({i}, {j}, {jp}) = {eta} out of [0, 1]"
                        )));
                    }
                }
            }
            if !self.priorities[i].is_finite() || self.priorities[i] < 0.0 {
                return Err(NodeError::InvalidSpec(format!(
                    "priority of input {i} must be finite and nonnegative"
                )));
            }
        }
        if self.demand.len() != m {
            return Err(NodeError::InvalidSpec("demand dimension mismatch".into()));
        }
        if self.supply.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(NodeError::InvalidSpec(
                "supplies must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// True when every restriction coefficient is exactly 1 (full FIFO).
    pub fn is_full_fifo(&self) -> bool {
        self.restriction
            .iter()
            .flatten()
            .flatten()
            .all(|eta| *eta == 1.0)
    }
}

/// Capacity-proportional priorities: `p_i = F_i` recovers the
/// capacity-weighted supply allocation rule.
pub fn tampere_priorities(capacities: &[f64]) -> Vec<f64> {
    capacities.to_vec()
}

/// Allocated input-output commodity flows for one node and one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    /// Flows per input, output and commodity, M x N x C.
    pub flows: Vec<Vec<Vec<f64>>>,
    /// Total flow leaving each input link.
    pub input_totals: Vec<f64>,
    /// Total flow entering each output link.
    pub output_totals: Vec<f64>,
}

impl FlowSolution {
    pub(crate) fn from_flows(flows: Vec<Vec<Vec<f64>>>) -> Self {
        let input_totals = flows
            .iter()
            .map(|row| row.iter().flatten().sum())
            .collect::<Vec<f64>>();
        let n = flows.first().map_or(0, |row| row.len());
        let output_totals = (0..n)
            .map(|j| flows.iter().map(|row| row[j].iter().sum::<f64>()).sum())
            .collect();
        FlowSolution {
            flows,
            input_totals,
            output_totals,
        }
    }

    /// Total flow of movement `(i, j)` across commodities.
    pub fn movement_total(&self, i: usize, j: usize) -> f64 {
        self.flows[i][j].iter().sum()
    }

    /// Total flow through the node.
    pub fn total(&self) -> f64 {
        self.input_totals.iter().sum()
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NodeError {
    #[error("invalid node spec: {0}")]
    InvalidSpec(String),
    #[error("solver requires {expected}, instance has {actual}")]
    WrongShape {
        expected: &'static str,
        actual: String,
    },
}
