//! Literal evaluation of the node model's constraint families against a
//! proposed flow allocation.

use super::OracleError;
use crate::node::{FlowSolution, NodeSpec};
use crate::TOLERANCE;

/// Constraint families evaluated by [`check_solution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// All flows nonnegative.
    NonNegativity,
    /// Movement flows bounded by oriented demand.
    Demand,
    /// Output totals bounded by supply.
    Supply,
    /// Commodity flows within a movement proportional to commodity demands.
    CommodityProportionality,
    /// Equal throughput ratios across the movements of fully-FIFO inputs.
    FifoEquality,
    /// Movement flows within the mutual-restriction bounds.
    ///
    /// For a single input the spillover bounds close over supply ratios and
    /// are checked in full. For several inputs a restriction only binds when
    /// its output actually becomes the bottleneck of a round, so without the
    /// solve trace only the fully-coupled rows are checkable; the fired
    /// bounds are re-derived per round by [`super::verify_trace`].
    RelaxedFifo,
    /// Restricted inputs hold at least their priority share of the supply of
    /// their most restrictive output.
    PriorityAllocation,
    /// Every served movement presses against demand, supply or a restriction
    /// bound, directly or through a full-FIFO coupling.
    ActiveConstraint,
}

/// Status of one constraint family.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub kind: ConstraintKind,
    pub satisfied: bool,
    /// Largest violation found, in vehicles.
    pub worst_violation: f64,
    /// Indices locating the worst violation (movement or output indices).
    pub offending: Vec<usize>,
}

/// Per-constraint verdicts for one (spec, solution) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub tolerance: f64,
    pub checks: Vec<ConstraintCheck>,
}

impl ConstraintReport {
    pub fn satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn check(&self, kind: ConstraintKind) -> &ConstraintCheck {
        self.checks
            .iter()
            .find(|c| c.kind == kind)
            .expect("all kinds are always reported")
    }

    pub fn worst_violation(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.worst_violation)
            .fold(0.0, f64::max)
    }
}

struct Movements {
    m: usize,
    n: usize,
    /// Total oriented demand per movement.
    demand: Vec<Vec<f64>>,
    /// Total flow per movement.
    flow: Vec<Vec<f64>>,
    /// Throughput ratio f/S per movement with positive demand, else 0.
    ratio: Vec<Vec<f64>>,
}

/// Evaluates every constraint family literally and reports the violations.
pub fn check_solution(
    spec: &NodeSpec,
    solution: &FlowSolution,
    tolerance: f64,
) -> Result<ConstraintReport, OracleError> {
    let m = spec.input_count();
    let n = spec.output_count();
    let c = spec.commodities;
    if solution.flows.len() != m
        || solution.flows.iter().any(|row| row.len() != n)
        || solution
            .flows
            .iter()
            .flatten()
            .any(|cell| cell.len() != c)
    {
        return Err(OracleError::DimensionMismatch(format!(
            "expected {m} x {n} x {c} flows"
        )));
    }

    let mut mv = Movements {
        m,
        n,
        demand: vec![vec![0.0; n]; m],
        flow: vec![vec![0.0; n]; m],
        ratio: vec![vec![0.0; n]; m],
    };
    for i in 0..m {
        for j in 0..n {
            mv.demand[i][j] = spec.total_oriented_demand(i, j);
            mv.flow[i][j] = solution.flows[i][j].iter().sum();
            if mv.demand[i][j] > 0.0 {
                mv.ratio[i][j] = mv.flow[i][j] / mv.demand[i][j];
            }
        }
    }

    let checks = vec![
        check_nonnegativity(spec, solution),
        check_demand(spec, solution, tolerance),
        check_supply(spec, &mv, tolerance),
        check_proportionality(spec, solution, &mv, tolerance),
        check_fifo_equality(spec, &mv, tolerance),
        check_relaxed_fifo(spec, &mv, tolerance),
        check_priority(spec, &mv, tolerance),
        check_active(spec, &mv, tolerance),
    ];
    Ok(ConstraintReport {
        tolerance,
        checks,
    })
}

fn worst(kind: ConstraintKind, tolerance: f64, violation: f64, offending: Vec<usize>) -> ConstraintCheck {
    ConstraintCheck {
        kind,
        satisfied: violation <= tolerance,
        worst_violation: violation.max(0.0),
        offending,
    }
}

fn check_nonnegativity(spec: &NodeSpec, solution: &FlowSolution) -> ConstraintCheck {
    let mut violation: f64 = 0.0;
    let mut at = Vec::new();
    for i in 0..spec.input_count() {
        for j in 0..spec.output_count() {
            for cc in 0..spec.commodities {
                let v = -solution.flows[i][j][cc];
                if v > violation {
                    violation = v;
                    at = vec![i, j, cc];
                }
            }
        }
    }
    worst(ConstraintKind::NonNegativity, TOLERANCE, violation, at)
}

fn check_demand(spec: &NodeSpec, solution: &FlowSolution, tolerance: f64) -> ConstraintCheck {
    let mut violation: f64 = 0.0;
    let mut at = Vec::new();
    for i in 0..spec.input_count() {
        for j in 0..spec.output_count() {
            for cc in 0..spec.commodities {
                let v = solution.flows[i][j][cc] - spec.oriented_demand(i, j, cc);
                if v > violation {
                    violation = v;
                    at = vec![i, j, cc];
                }
            }
        }
    }
    worst(ConstraintKind::Demand, tolerance, violation, at)
}

fn check_supply(spec: &NodeSpec, mv: &Movements, tolerance: f64) -> ConstraintCheck {
    let mut violation: f64 = 0.0;
    let mut at = Vec::new();
    for j in 0..mv.n {
        let total: f64 = (0..mv.m).map(|i| mv.flow[i][j]).sum();
        let v = total - spec.supply[j];
        if v > violation {
            violation = v;
            at = vec![j];
        }
    }
    worst(ConstraintKind::Supply, tolerance, violation, at)
}

fn check_proportionality(
    spec: &NodeSpec,
    solution: &FlowSolution,
    mv: &Movements,
    tolerance: f64,
) -> ConstraintCheck {
    let mut violation: f64 = 0.0;
    let mut at = Vec::new();
    for i in 0..mv.m {
        for j in 0..mv.n {
            if mv.demand[i][j] <= 0.0 {
                continue;
            }
            for cc in 0..spec.commodities {
                let expected = spec.oriented_demand(i, j, cc) * mv.flow[i][j] / mv.demand[i][j];
                let v = (solution.flows[i][j][cc] - expected).abs();
                if v > violation {
                    violation = v;
                    at = vec![i, j, cc];
                }
            }
        }
    }
    worst(ConstraintKind::CommodityProportionality, tolerance, violation, at)
}

/// Inputs whose every off-diagonal restriction coefficient is 1 must move
/// all their commodity traffic at one common throughput ratio.
fn check_fifo_equality(spec: &NodeSpec, mv: &Movements, tolerance: f64) -> ConstraintCheck {
    let mut violation: f64 = 0.0;
    let mut at = Vec::new();
    for i in 0..mv.m {
        let fully_coupled = spec.restriction[i]
            .iter()
            .flatten()
            .all(|eta| *eta == 1.0);
        if !fully_coupled {
            continue;
        }
        for j in 0..mv.n {
            if mv.demand[i][j] <= 0.0 {
                continue;
            }
            for jp in 0..mv.n {
                if mv.demand[i][jp] <= 0.0 || jp == j {
                    continue;
                }
                // f_ij * S_ij' = f_ij' * S_ij, reported in vehicles.
                let v = (mv.flow[i][j] - mv.ratio[i][jp] * mv.demand[i][j]).abs();
                if v > violation {
                    violation = v;
                    at = vec![i, j, jp];
                }
            }
        }
    }
    worst(ConstraintKind::FifoEquality, tolerance, violation, at)
}

/// Smallest decay any other output could have imposed on movement `(i, j)`,
/// measured from final flows. A lower bound for the actual working-demand
/// decay, so dividing by it never under-estimates a restrictor's effective
/// throughput ratio.
fn least_decay(spec: &NodeSpec, mv: &Movements, i: usize, j: usize) -> f64 {
    let mut decay: f64 = 1.0;
    for jp in 0..mv.n {
        if jp == j || mv.demand[i][jp] <= 0.0 {
            continue;
        }
        let eta = spec.restriction[i][jp][j];
        if eta > 0.0 {
            decay = decay.min(1.0 - eta + eta * mv.ratio[i][jp].min(1.0));
        }
    }
    decay
}

fn relaxed_bound(spec: &NodeSpec, mv: &Movements, i: usize, j: usize, jp: usize) -> f64 {
    let eta = spec.restriction[i][jp][j];
    let decay = least_decay(spec, mv, i, jp);
    let effective_ratio = if decay > 0.0 {
        (mv.ratio[i][jp] / decay).min(1.0)
    } else {
        1.0
    };
    (1.0 - eta) * mv.demand[i][j] + eta * effective_ratio * mv.demand[i][j]
}

/// One-step bound with the restrictor ratio taken against its original
/// demand; used to locate tight constraints, not as a feasibility test.
fn literal_bound(spec: &NodeSpec, mv: &Movements, i: usize, j: usize, jp: usize) -> f64 {
    let eta = spec.restriction[i][jp][j];
    (1.0 - eta) * mv.demand[i][j] + eta * mv.ratio[i][jp] * mv.demand[i][j]
}

fn check_relaxed_fifo(spec: &NodeSpec, mv: &Movements, tolerance: f64) -> ConstraintCheck {
    let mut violation: f64 = 0.0;
    let mut at = Vec::new();
    if mv.m == 1 {
        // Single input: spillover bounds built from supply reduction
        // factors. A restrictor imposes its static factor only if nothing
        // upstream can decay its own demand first (otherwise it fires at a
        // processing-order-dependent ratio, checkable only from the trace).
        for jp in 0..mv.n {
            if mv.demand[0][jp] <= 0.0 {
                continue;
            }
            let immune = (0..mv.n)
                .all(|jpp| jpp == jp || spec.restriction[0][jpp][jp] == 0.0);
            if !immune {
                continue;
            }
            let alpha = (spec.supply[jp] / mv.demand[0][jp]).min(1.0);
            for j in 0..mv.n {
                if jp == j || mv.demand[0][j] <= 0.0 {
                    continue;
                }
                let eta = spec.restriction[0][jp][j];
                let bound = (1.0 - eta) * mv.demand[0][j] + eta * alpha * mv.demand[0][j];
                let v = mv.flow[0][j] - bound;
                if v > violation {
                    violation = v;
                    at = vec![0, j, jp];
                }
            }
        }
    } else {
        // Several inputs: bounds of fully-coupled rows hold unconditionally;
        // the partially-coupled ones depend on bottleneck order and are
        // verified against the solve trace instead.
        for i in 0..mv.m {
            let fully_coupled = spec.restriction[i].iter().flatten().all(|eta| *eta == 1.0);
            if !fully_coupled {
                continue;
            }
            for j in 0..mv.n {
                if mv.demand[i][j] <= 0.0 {
                    continue;
                }
                for jp in 0..mv.n {
                    if jp == j || mv.demand[i][jp] <= 0.0 {
                        continue;
                    }
                    let v = mv.flow[i][j] - literal_bound(spec, mv, i, j, jp);
                    if v > violation {
                        violation = v;
                        at = vec![i, j, jp];
                    }
                }
            }
        }
    }
    worst(ConstraintKind::RelaxedFifo, tolerance, violation, at)
}

/// Priority constraint via the two-category reading: for every input whose
/// total flow falls short of its demand, outputs where it is the worst
/// treated per unit of oriented priority are its restrictors, and at its
/// most restrictive output it must keep at least its pro-rata supply share.
fn check_priority(spec: &NodeSpec, mv: &Movements, tolerance: f64) -> ConstraintCheck {
    let mut violation: f64 = 0.0;
    let mut at = Vec::new();
    if mv.m < 2 {
        // A lone input faces no competition for supply.
        return worst(ConstraintKind::PriorityAllocation, tolerance, violation, at);
    }
    let full_fifo = spec.is_full_fifo();
    // Oriented priorities on original demands.
    let mut oriented = vec![vec![0.0; mv.n]; mv.m];
    for i in 0..mv.m {
        let total = spec.total_demand(i);
        if total > 0.0 {
            for j in 0..mv.n {
                oriented[i][j] = spec.priorities[i] * mv.demand[i][j] / total;
            }
        }
    }
    let scale = mv
        .flow
        .iter()
        .flatten()
        .fold(1.0_f64, |acc, f| acc.max(f.abs()));

    for i in 0..mv.m {
        let sent: f64 = (0..mv.n).map(|j| mv.flow[i][j]).sum();
        let wanted = spec.total_demand(i);
        if sent + tolerance.max(TOLERANCE * scale) >= wanted {
            continue; // demand satisfied, category 2 everywhere
        }
        // Restrictor candidates: outputs where no other input does worse
        // per unit priority than this one.
        let mut restrictors = Vec::new();
        for j in 0..mv.n {
            if mv.demand[i][j] <= 0.0 {
                continue;
            }
            let qualifies = (0..mv.m).filter(|ip| *ip != i).all(|ip| {
                let lhs = oriented[ip][j] * mv.flow[i][j];
                let rhs = oriented[i][j] * mv.flow[ip][j];
                lhs >= rhs - tolerance * (1.0 + lhs.abs().max(rhs.abs()))
            });
            if qualifies {
                restrictors.push(j);
            }
        }
        if restrictors.is_empty() {
            if full_fifo {
                // Under full FIFO a supply-short input always has a most
                // restrictive output; report the least-bad candidate gap.
                let mut gap = f64::INFINITY;
                let mut at_j = 0;
                for j in 0..mv.n {
                    if mv.demand[i][j] <= 0.0 {
                        continue;
                    }
                    let worst_pair = (0..mv.m)
                        .filter(|ip| *ip != i)
                        .map(|ip| oriented[i][j] * mv.flow[ip][j] - oriented[ip][j] * mv.flow[i][j])
                        .fold(0.0_f64, f64::max);
                    let normalized = worst_pair / (1.0 + spec.priorities[i]);
                    if normalized < gap {
                        gap = normalized;
                        at_j = j;
                    }
                }
                if gap.is_finite() && gap > violation {
                    violation = gap;
                    at = vec![i, at_j];
                }
            }
            // With relaxed couplings an input can be cut by spillover alone;
            // no restrictor means no share entitlement to check.
            continue;
        }
        if !full_fifo {
            // Relaxed couplings redistribute an input's priority across its
            // outputs as working demands decay, so the share it can claim at
            // one output is no longer bounded by the original priorities;
            // only the classification consistency above remains checkable.
            continue;
        }
        // The input's true bottleneck is among its restrictor candidates
        // (FIFO equalizes flow per priority across its movements, so ties
        // cannot single it out); the entitlement must hold there.
        let mut best_shortfall = f64::INFINITY;
        let mut best_j = None;
        for &j in &restrictors {
            if oriented[i][j] <= 0.0 {
                continue;
            }
            let weight: f64 = (0..mv.m).map(|ip| oriented[ip][j]).sum();
            if weight <= 0.0 {
                continue;
            }
            let entitled = oriented[i][j] / weight * spec.supply[j];
            let shortfall = entitled - mv.flow[i][j];
            if shortfall < best_shortfall {
                best_shortfall = shortfall;
                best_j = Some(j);
            }
        }
        if let Some(j) = best_j {
            if best_shortfall > violation {
                violation = best_shortfall;
                at = vec![i, j];
            }
        }
    }
    worst(ConstraintKind::PriorityAllocation, tolerance, violation, at)
}

/// Every movement with demand must press against one of its bounds, either
/// directly or through a full-FIFO coupling to a movement that does.
fn check_active(spec: &NodeSpec, mv: &Movements, tolerance: f64) -> ConstraintCheck {
    let tol = tolerance.max(1e-7);
    let mut slack = vec![vec![f64::INFINITY; mv.n]; mv.m];
    let mut output_total = vec![0.0; mv.n];
    for j in 0..mv.n {
        output_total[j] = (0..mv.m).map(|i| mv.flow[i][j]).sum();
    }
    for i in 0..mv.m {
        for j in 0..mv.n {
            if mv.demand[i][j] <= 0.0 {
                continue;
            }
            let mut s = mv.demand[i][j] - mv.flow[i][j]; // demand bound
            s = s.min(spec.supply[j] - output_total[j]); // supply bound
            for jp in 0..mv.n {
                if jp == j || mv.demand[i][jp] <= 0.0 {
                    continue;
                }
                if spec.restriction[i][jp][j] > 0.0 {
                    s = s.min(literal_bound(spec, mv, i, j, jp) - mv.flow[i][j]);
                    s = s.min(relaxed_bound(spec, mv, i, j, jp) - mv.flow[i][j]);
                }
            }
            slack[i][j] = s;
        }
    }
    // Propagate activity through full couplings: a movement locked by FIFO
    // to an actively constrained partner is itself actively constrained.
    let mut active = vec![vec![false; mv.n]; mv.m];
    for i in 0..mv.m {
        for j in 0..mv.n {
            active[i][j] = mv.demand[i][j] > 0.0 && slack[i][j] <= tol;
        }
    }
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..mv.m {
            for j in 0..mv.n {
                if mv.demand[i][j] <= 0.0 || active[i][j] {
                    continue;
                }
                for jp in 0..mv.n {
                    if jp != j
                        && mv.demand[i][jp] > 0.0
                        && spec.restriction[i][jp][j] == 1.0
                        && active[i][jp]
                    {
                        active[i][j] = true;
                        changed = true;
                        break;
                    }
                }
            }
        }
    }
    let mut violation: f64 = 0.0;
    let mut at = Vec::new();
    for i in 0..mv.m {
        for j in 0..mv.n {
            if mv.demand[i][j] > 0.0 && !active[i][j] && slack[i][j] > violation {
                violation = slack[i][j];
                at = vec![i, j];
            }
        }
    }
    worst(ConstraintKind::ActiveConstraint, tol, violation, at)
}
