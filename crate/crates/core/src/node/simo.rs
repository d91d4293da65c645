//! Diverge solver: one input spreading over many outputs with the FIFO rule
//! relaxed through mutual restriction coefficients.

use super::{FlowSolution, NodeError, NodeSpec};

/// Solves an M = 1 instance in closed form.
///
/// Each output's flow is the most binding of its own reduction factor and
/// the restrictions spilled over from the other outputs. Matches
/// [`super::solve_mimo_relaxed`] on the same instance; kept as an
/// independent reference path.
pub fn solve_simo_relaxed(spec: &NodeSpec) -> Result<FlowSolution, NodeError> {
    spec.validate()?;
    if spec.input_count() != 1 {
        return Err(NodeError::WrongShape {
            expected: "a single input link",
            actual: format!("{} inputs", spec.input_count()),
        });
    }
    let n = spec.output_count();
    let c = spec.commodities;

    let oriented: Vec<f64> = (0..n).map(|j| spec.total_oriented_demand(0, j)).collect();
    let mut flows = vec![vec![vec![0.0; c]; n]; 1];

    for j in 0..n {
        if oriented[j] <= 0.0 {
            continue;
        }
        // Own supply restriction: alpha_j * S_j = min(S_j, R_j).
        let mut movement = oriented[j].min(spec.supply[j]);
        // Spillover from every other output j': the eta fraction of this
        // movement is scaled by j'"s reduction factor.
        for jp in 0..n {
            if jp == j || oriented[jp] <= 0.0 {
                continue;
            }
            let eta = spec.restriction[0][jp][j];
            let spilled = (1.0 - eta) * oriented[j]
                + eta * (oriented[jp].min(spec.supply[jp]) * oriented[j] / oriented[jp]);
            movement = movement.min(spilled);
        }
        for cc in 0..c {
            flows[0][j][cc] = spec.oriented_demand(0, j, cc) * movement / oriented[j];
        }
    }
    Ok(FlowSolution::from_flows(flows))
}
