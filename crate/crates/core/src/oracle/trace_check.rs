//! Round-by-round re-derivation of a solve from its trace.
//!
//! Restriction bounds at a multi-input node only fire through outputs that
//! become round bottlenecks, so a posteriori verification must follow the
//! witnessed processing order. This verifier takes each round's snapshot
//! (remaining supplies, working demands, membership sets), recomputes the
//! substituted priorities, oriented priorities, supply factors, branch
//! choice, flow assignments and working-demand decays from scratch, and
//! compares them against the next snapshot and the final flows.

use super::OracleError;
use crate::node::{FlowSolution, NodeSpec, RoundBranch, SolveTrace};
use crate::TOLERANCE;

/// Outcome of re-deriving a solve from its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceVerification {
    pub consistent: bool,
    /// Largest numeric deviation found between re-derived and recorded values.
    pub worst_deviation: f64,
    /// Description of the first structural inconsistency, if any.
    pub failure: Option<String>,
}

/// Re-derives every round of `trace` and checks it against `solution`.
pub fn verify_trace(
    spec: &NodeSpec,
    solution: &FlowSolution,
    trace: &SolveTrace,
    tolerance: f64,
) -> Result<TraceVerification, OracleError> {
    spec.validate()?;
    let m = spec.input_count();
    let n = spec.output_count();
    let mut worst: f64 = 0.0;
    let mut fail: Option<String> = None;
    let mut assigned_once = vec![vec![false; n]; m];

    let note = |cond: bool, msg: String, fail: &mut Option<String>| {
        if !cond && fail.is_none() {
            *fail = Some(msg);
        }
    };

    for (idx, round) in trace.rounds.iter().enumerate() {
        let active = &round.active_outputs;
        let union: Vec<usize> = (0..m)
            .filter(|i| active.iter().any(|j| round.unprocessed[*j].contains(i)))
            .collect();
        if union.is_empty() {
            note(false, format!("round {idx}: no unprocessed inputs"), &mut fail);
            break;
        }
        // Zero-priority substitution.
        let any_positive = union.iter().any(|i| spec.priorities[*i] > 0.0);
        let priority = |i: usize| -> f64 {
            if any_positive {
                spec.priorities[i]
            } else {
                1.0 / union.len() as f64
            }
        };
        // Oriented priorities from the recorded working demands.
        let row_sum = |i: usize| -> f64 {
            active.iter().map(|j| round.effective_demand[i][*j]).sum()
        };
        let oriented = |i: usize, j: usize| -> f64 {
            let sum = row_sum(i);
            if sum > 0.0 {
                priority(i) * round.effective_demand[i][j] / sum
            } else {
                0.0
            }
        };
        // Supply factors and the bottleneck property.
        let factor = |j: usize| -> f64 {
            let weight: f64 = round.unprocessed[j].iter().map(|i| oriented(*i, j)).sum();
            if weight > 0.0 {
                round.supply_left[j] / weight
            } else {
                f64::INFINITY
            }
        };
        let b = round.bottleneck;
        let a_star = factor(b);
        for &j in active {
            note(
                a_star <= factor(j) + tolerance * (1.0 + a_star.abs()),
                format!("round {idx}: output {b} is not the most restricted"),
                &mut fail,
            );
        }

        // Branch re-derivation.
        let satisfied: Vec<usize> = round.unprocessed[b]
            .iter()
            .copied()
            .filter(|i| row_sum(*i) <= priority(*i) * a_star + TOLERANCE)
            .collect();
        match &round.branch {
            RoundBranch::DemandMet { inputs } => {
                note(
                    *inputs == satisfied,
                    format!("round {idx}: demand-met inputs {inputs:?} != derived {satisfied:?}"),
                    &mut fail,
                );
                for &i in inputs {
                    for &j in active {
                        if round.unprocessed[j].contains(&i) {
                            let expected = round.effective_demand[i][j];
                            let got: f64 = solution.flows[i][j].iter().sum();
                            worst = worst.max((got - expected).abs());
                            assigned_once[i][j] = true;
                        }
                    }
                }
            }
            RoundBranch::SupplySplit => {
                note(
                    satisfied.is_empty(),
                    format!("round {idx}: supply split despite satisfiable inputs {satisfied:?}"),
                    &mut fail,
                );
                let members = round.unprocessed[b].clone();
                for &i in &members {
                    let flow_at_b: f64 = solution.flows[i][b].iter().sum();
                    for &j in active {
                        if !round.unprocessed[j].contains(&i) {
                            continue;
                        }
                        let eta = spec.restriction[i][b][j];
                        if eta == 1.0 {
                            let expected = oriented(i, j) * a_star;
                            let got: f64 = solution.flows[i][j].iter().sum();
                            worst = worst.max((got - expected).abs());
                            assigned_once[i][j] = true;
                        } else if idx + 1 < trace.rounds.len() {
                            // Working-demand decay against the original
                            // oriented demand, visible in the next snapshot.
                            let original = spec.total_oriented_demand(i, j);
                            let base = spec.total_oriented_demand(i, b);
                            let ratio = if base > 0.0 { flow_at_b / base } else { 0.0 };
                            let bound = (1.0 - eta) * original + eta * ratio * original;
                            let expected = round.effective_demand[i][j].min(bound);
                            let next = trace.rounds[idx + 1].effective_demand[i][j];
                            worst = worst.max((next - expected).abs());
                        }
                    }
                }
            }
        }

        // Supply bookkeeping carried into the next round.
        if idx + 1 < trace.rounds.len() {
            let next = &trace.rounds[idx + 1];
            for j in 0..n {
                let written: f64 = round
                    .assigned
                    .iter()
                    .filter(|(_, jj)| *jj == j)
                    .map(|(i, _)| solution.flows[*i][j].iter().sum::<f64>())
                    .sum();
                worst = worst.max(
                    (next.supply_left[j] - (round.supply_left[j] - written)).abs(),
                );
            }
        }
    }

    // Every positive flow must come from a witnessed assignment.
    for i in 0..m {
        for j in 0..n {
            let f: f64 = solution.flows[i][j].iter().sum();
            if f > tolerance && !assigned_once[i][j] {
                note(
                    false,
                    format!("movement ({i}, {j}) carries {f} without a recorded assignment"),
                    &mut fail,
                );
            }
        }
    }

    Ok(TraceVerification {
        consistent: fail.is_none() && worst <= tolerance,
        worst_deviation: worst,
        failure: fail,
    })
}
