//! General node solver with the FIFO rule fully enforced: a restriction on
//! any output movement of an input scales all of the input's movements.

use super::{FlowSolution, NodeError, NodeSpec};
use crate::TOLERANCE;

/// Solves a general instance under full FIFO, ignoring the restriction
/// tensor (it is implicitly all ones).
///
/// Matches [`super::solve_mimo_relaxed`] with all restriction coefficients
/// at 1; kept as an independent reference path.
pub fn solve_mimo_fifo(spec: &NodeSpec) -> Result<FlowSolution, NodeError> {
    spec.validate()?;
    let m = spec.input_count();
    let n = spec.output_count();
    let c = spec.commodities;

    let mut flows = vec![vec![vec![0.0; c]; n]; m];
    let mut oriented_demand = vec![vec![0.0; n]; m];
    for i in 0..m {
        for j in 0..n {
            oriented_demand[i][j] = spec.total_oriented_demand(i, j);
        }
    }

    let mut supply_left = spec.supply.clone();
    let mut member = vec![vec![false; m]; n];
    for j in 0..n {
        for i in 0..m {
            member[j][i] = oriented_demand[i][j] > 0.0;
        }
    }

    loop {
        let active: Vec<usize> = (0..n).filter(|j| member[*j].iter().any(|b| *b)).collect();
        if active.is_empty() {
            return Ok(FlowSolution::from_flows(flows));
        }
        let union: Vec<usize> = (0..m)
            .filter(|i| active.iter().any(|j| member[*j][*i]))
            .collect();
        let any_positive = union.iter().any(|i| spec.priorities[*i] > 0.0);
        let mut priorities = vec![0.0; m];
        for &i in &union {
            priorities[i] = if any_positive {
                spec.priorities[i]
            } else {
                1.0 / union.len() as f64
            };
        }
        // Oriented priorities against the fixed total demand.
        let mut oriented = vec![vec![0.0; n]; m];
        for &i in &union {
            let total = spec.total_demand(i);
            if total > 0.0 {
                for &j in &active {
                    if member[j][i] {
                        oriented[i][j] = priorities[i] * oriented_demand[i][j] / total;
                    }
                }
            }
        }

        let mut factors = vec![f64::INFINITY; n];
        for &j in &active {
            let weight: f64 = (0..m).filter(|i| member[j][*i]).map(|i| oriented[i][j]).sum();
            if weight > 0.0 {
                factors[j] = supply_left[j] / weight;
            }
        }
        let best = active
            .iter()
            .map(|j| factors[*j])
            .fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return Ok(FlowSolution::from_flows(flows));
        }
        let bottleneck = *active
            .iter()
            .find(|j| factors[**j] <= best + TOLERANCE)
            .expect("a finite factor exists");
        let a_star = factors[bottleneck];

        let satisfied: Vec<usize> = (0..m)
            .filter(|i| member[bottleneck][*i])
            .filter(|i| spec.total_demand(*i) <= priorities[*i] * a_star + TOLERANCE)
            .collect();

        if !satisfied.is_empty() {
            for &i in &satisfied {
                for &j in &active {
                    if member[j][i] {
                        let mut written = 0.0;
                        for cc in 0..c {
                            flows[i][j][cc] = spec.oriented_demand(i, j, cc);
                            written += flows[i][j][cc];
                        }
                        supply_left[j] -= written;
                    }
                }
                for j in 0..n {
                    member[j][i] = false;
                }
            }
        } else {
            let members: Vec<usize> = (0..m).filter(|i| member[bottleneck][*i]).collect();
            for &i in &members {
                for &j in &active {
                    if member[j][i] {
                        let share = oriented[i][j] * a_star;
                        let total = oriented_demand[i][j];
                        let mut written = 0.0;
                        for cc in 0..c {
                            flows[i][j][cc] = spec.oriented_demand(i, j, cc) * share / total;
                            written += flows[i][j][cc];
                        }
                        supply_left[j] -= written;
                    }
                }
                for j in 0..n {
                    member[j][i] = false;
                }
            }
        }
    }
}
