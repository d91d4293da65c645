//! Demand-proportional reference allocation.
//!
//! Replaces the priority constraint with the rule that every input's
//! throughput ratio at an output is equal. Combined with full FIFO this
//! forces a single reduction factor per connected component of the movement
//! graph, set by the most binding supply. Kept as a comparator: it satisfies
//! demand, supply and FIFO but generally leaves supply unused.

use super::OracleError;
use crate::node::{FlowSolution, NodeSpec};

/// Solves the demand-proportional allocation for a single-commodity full-FIFO
/// instance.
pub fn bliemer_reference(spec: &NodeSpec) -> Result<FlowSolution, OracleError> {
    spec.validate()?;
    if spec.commodities != 1 {
        return Err(OracleError::Unsupported(
            "demand-proportional reference handles a single commodity".into(),
        ));
    }
    if !spec.is_full_fifo() {
        return Err(OracleError::Unsupported(
            "demand-proportional reference requires full FIFO".into(),
        ));
    }
    let m = spec.input_count();
    let n = spec.output_count();

    // Union-find over inputs and outputs joined by positive movements.
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn root(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            parent[r] = parent[parent[r]];
            r = parent[r];
        }
        r
    }
    for i in 0..m {
        for j in 0..n {
            if spec.total_oriented_demand(i, j) > 0.0 {
                let a = root(&mut parent, i);
                let b = root(&mut parent, m + j);
                parent[a] = b;
            }
        }
    }

    // Common reduction factor per component: most binding supply, capped at 1.
    let mut factor = vec![1.0_f64; m + n];
    for j in 0..n {
        let inflow_demand: f64 = (0..m).map(|i| spec.total_oriented_demand(i, j)).sum();
        if inflow_demand > 0.0 {
            let r = root(&mut parent, m + j);
            factor[r] = factor[r].min(spec.supply[j] / inflow_demand);
        }
    }

    let mut flows = vec![vec![vec![0.0; 1]; n]; m];
    for i in 0..m {
        for j in 0..n {
            let demand = spec.total_oriented_demand(i, j);
            if demand > 0.0 {
                let r = root(&mut parent, i);
                flows[i][j][0] = factor[r] * demand;
            }
        }
    }
    Ok(FlowSolution::from_flows(flows))
}
