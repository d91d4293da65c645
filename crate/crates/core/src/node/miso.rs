//! Merge solver: many inputs competing for a single output.

use super::{FlowSolution, NodeError, NodeSpec};
use crate::TOLERANCE;

/// Solves an N = 1 instance by processing inputs in rounds: inputs whose
/// demand fits their priority share are satisfied outright; once none do,
/// the remaining supply is divided in proportion to priorities.
///
/// Produces the same flows as [`super::solve_mimo_relaxed`] on the same
/// instance; kept as an independent reference path.
pub fn solve_miso(spec: &NodeSpec) -> Result<FlowSolution, NodeError> {
    spec.validate()?;
    if spec.output_count() != 1 {
        return Err(NodeError::WrongShape {
            expected: "a single output link",
            actual: format!("{} outputs", spec.output_count()),
        });
    }
    let m = spec.input_count();
    let c = spec.commodities;

    let mut flows = vec![vec![vec![0.0; c]; 1]; m];
    let mut supply_left = spec.supply[0];
    let mut unprocessed: Vec<usize> = (0..m).collect();

    while !unprocessed.is_empty() {
        let any_positive = unprocessed.iter().any(|i| spec.priorities[*i] > 0.0);
        let priority = |i: usize| {
            if any_positive {
                spec.priorities[i]
            } else {
                1.0 / unprocessed.len() as f64
            }
        };
        let weight: f64 = unprocessed.iter().map(|i| priority(*i)).sum();

        // Inputs that want to send less than their allocated supply.
        let satisfied: Vec<usize> = unprocessed
            .iter()
            .copied()
            .filter(|i| spec.total_demand(*i) <= priority(*i) * supply_left / weight + TOLERANCE)
            .collect();

        if !satisfied.is_empty() {
            for &i in &satisfied {
                for cc in 0..c {
                    flows[i][0][cc] = spec.demand[i][cc];
                }
                supply_left -= spec.total_demand(i);
            }
            unprocessed.retain(|i| !satisfied.contains(i));
        } else {
            for &i in &unprocessed {
                let total = spec.total_demand(i);
                let share = priority(i) * supply_left / weight;
                for cc in 0..c {
                    flows[i][0][cc] = spec.demand[i][cc] * share / total;
                }
            }
            unprocessed.clear();
        }
    }
    Ok(FlowSolution::from_flows(flows))
}
