//! General multi-input multi-output node solver with relaxed FIFO.
//!
//! Outputs are processed from most to least supply-restricted. Each round
//! either satisfies whole inputs (their remaining demand fits the allocated
//! supply) or exhausts the bottleneck output, dividing its remaining supply
//! in proportion to oriented priorities. A restriction coefficient of 1
//! propagates the bottleneck's cut to a movement in full; a fractional
//! coefficient only decays the movement's working demand, leaving it in play
//! for later rounds.

use super::trace::{RoundBranch, SolveRound, SolveTrace};
use super::{FlowSolution, NodeError, NodeSpec};
use crate::TOLERANCE;

/// Solves the general node instance, discarding the iteration trace.
pub fn solve_mimo_relaxed(spec: &NodeSpec) -> Result<FlowSolution, NodeError> {
    solve_mimo_relaxed_traced(spec).map(|(solution, _)| solution)
}

/// Solves the general node instance and reports the per-round trace.
pub fn solve_mimo_relaxed_traced(spec: &NodeSpec) -> Result<(FlowSolution, SolveTrace), NodeError> {
    spec.validate()?;
    let m = spec.input_count();
    let n = spec.output_count();
    let c = spec.commodities;

    let mut flows = vec![vec![vec![0.0; c]; n]; m];
    // Original total oriented demand, fixed; the restriction decay always
    // refers back to it.
    let mut original = vec![vec![0.0; n]; m];
    // Working per-commodity and total oriented demand.
    let mut eff = vec![vec![vec![0.0; c]; n]; m];
    let mut eff_total = vec![vec![0.0; n]; m];
    for i in 0..m {
        for j in 0..n {
            for cc in 0..c {
                eff[i][j][cc] = spec.oriented_demand(i, j, cc);
            }
            eff_total[i][j] = eff[i][j].iter().sum();
            original[i][j] = eff_total[i][j];
        }
    }

    let mut supply_left = spec.supply.clone();
    // member[j][i]: input i still contributes unassigned traffic to output j.
    let mut member = vec![vec![false; m]; n];
    for j in 0..n {
        for i in 0..m {
            member[j][i] = eff_total[i][j] > 0.0;
        }
    }

    let mut trace = SolveTrace::default();
    // Every round removes an input everywhere or retires an output.
    let round_cap = m + n + 1;

    for round in 0..=round_cap {
        // Drop inputs with no working demand left towards active outputs.
        let mut active: Vec<usize> = (0..n).filter(|j| member[*j].iter().any(|b| *b)).collect();
        for i in 0..m {
            if active.iter().any(|j| member[*j][i]) {
                let remaining: f64 = active.iter().map(|j| eff_total[i][*j]).sum();
                if remaining <= 0.0 {
                    for j in 0..n {
                        member[j][i] = false;
                    }
                }
            }
        }
        active.retain(|j| member[*j].iter().any(|b| *b));
        if active.is_empty() {
            let solution = FlowSolution::from_flows(flows);
            return Ok((solution, trace));
        }
        if round == round_cap {
            return Err(NodeError::InvalidSpec(
                "node solver failed to terminate within the round bound".into(),
            ));
        }

        let union: Vec<usize> = (0..m)
            .filter(|i| active.iter().any(|j| member[*j][*i]))
            .collect();
        // Zero-priority substitution: when no unprocessed input has priority,
        // they compete with equal positive weights.
        let any_positive = union.iter().any(|i| spec.priorities[*i] > 0.0);
        let mut priorities = vec![0.0; m];
        for &i in &union {
            priorities[i] = if any_positive {
                spec.priorities[i]
            } else {
                1.0 / union.len() as f64
            };
        }

        // Oriented priorities against the remaining working demand.
        let mut row_sum = vec![0.0; m];
        for &i in &union {
            row_sum[i] = active.iter().map(|j| eff_total[i][*j]).sum();
        }
        let mut oriented = vec![vec![0.0; n]; m];
        for &j in &active {
            for i in 0..m {
                if member[j][i] && row_sum[i] > 0.0 {
                    oriented[i][j] = priorities[i] * eff_total[i][j] / row_sum[i];
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
            // No unprocessed input holds any priority weight; nothing more
            // can be allocated.
            for j in 0..n {
                member[j].iter_mut().for_each(|b| *b = false);
            }
            continue;
        }
        let bottleneck = *active
            .iter()
            .find(|j| factors[**j] <= best + TOLERANCE)
            .expect("a finite factor exists");
        let a_star = factors[bottleneck];

        // Pre-assignment snapshot; branch and assignments are filled in below.
        let mut record = SolveRound {
            index: round,
            active_outputs: active.clone(),
            unprocessed: (0..n)
                .map(|j| (0..m).filter(|i| member[j][*i]).collect())
                .collect(),
            supply_left: supply_left.clone(),
            effective_demand: eff_total.clone(),
            priorities: priorities.clone(),
            oriented_priorities: oriented.clone(),
            factors: factors.clone(),
            bottleneck,
            branch: RoundBranch::SupplySplit,
            assigned: Vec::new(),
        };

        // Inputs at the bottleneck whose remaining demand fits the supply
        // allocated by their priority.
        let satisfied: Vec<usize> = (0..m)
            .filter(|i| member[bottleneck][*i])
            .filter(|i| row_sum[*i] <= priorities[*i] * a_star + TOLERANCE)
            .collect();

        if !satisfied.is_empty() {
            let mut assigned = Vec::new();
            for &i in &satisfied {
                for &j in &active {
                    if member[j][i] {
                        let mut written = 0.0;
                        for cc in 0..c {
                            flows[i][j][cc] = eff[i][j][cc];
                            written += eff[i][j][cc];
                        }
                        supply_left[j] -= written;
                        assigned.push((i, j));
                    }
                }
            }
            record.branch = RoundBranch::DemandMet {
                inputs: satisfied.clone(),
            };
            record.assigned = assigned;
            trace.rounds.push(record);
            for i in satisfied {
                for j in 0..n {
                    member[j][i] = false;
                }
            }
        } else {
            let members: Vec<usize> = (0..m).filter(|i| member[bottleneck][*i]).collect();
            let mut assigned = Vec::new();
            // First pass: movements fully coupled to the bottleneck get their
            // flows, the bottleneck itself included (its diagonal is 1).
            for &i in &members {
                for &j in &active {
                    if spec.restriction[i][bottleneck][j] == 1.0 && member[j][i] {
                        let share = oriented[i][j] * a_star;
                        let total = eff_total[i][j];
                        let mut written = 0.0;
                        for cc in 0..c {
                            flows[i][j][cc] = eff[i][j][cc] * share / total;
                            written += flows[i][j][cc];
                        }
                        supply_left[j] -= written;
                        assigned.push((i, j));
                    }
                }
            }
            // Second pass: partially coupled movements stay in play with
            // their working demand decayed by the bottleneck's throughput
            // ratio, measured against the original oriented demand.
            for &i in &members {
                let flow_at_bottleneck: f64 = flows[i][bottleneck].iter().sum();
                let base = original[i][bottleneck];
                let ratio = if base > 0.0 { flow_at_bottleneck / base } else { 0.0 };
                for &j in &active {
                    let eta = spec.restriction[i][bottleneck][j];
                    if eta < 1.0 && member[j][i] {
                        let bound = (1.0 - eta) * original[i][j] + eta * ratio * original[i][j];
                        let current = eff_total[i][j];
                        if bound < current {
                            let factor = bound / current;
                            for cc in 0..c {
                                eff[i][j][cc] *= factor;
                            }
                            eff_total[i][j] = bound;
                        }
                    }
                }
            }
            record.assigned = assigned;
            trace.rounds.push(record);
            for &i in &members {
                for &j in &active {
                    if spec.restriction[i][bottleneck][j] == 1.0 {
                        member[j][i] = false;
                    }
                }
            }
        }
    }
    unreachable!("loop exits via the empty-active check");
}
