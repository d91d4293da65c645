//! Brute-force optimality oracle for tiny single-commodity instances.
//!
//! Scans flow grids exhaustively and keeps the best feasible total. The
//! feasible set is evaluated from first principles, independently of the
//! solver's processing order: supply and demand bounds, the spillover bounds
//! of the diverge model for a single input, and the two-category priority
//! conditions on the full-FIFO reduction manifold for two inputs.

use super::OracleError;
use crate::node::NodeSpec;
use crate::TOLERANCE;

/// Result of a brute-force scan.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    /// Best feasible total flow found.
    pub total: f64,
    /// Movement flows of the best grid point, M x N.
    pub flows: Vec<Vec<f64>>,
    /// Number of grid points evaluated.
    pub evaluated: usize,
}

/// Exhaustively scans flow allocations for an instance with at most two
/// inputs, three outputs and one commodity.
///
/// `resolution` is the number of steps per grid dimension: at most 50 for
/// the per-movement grid of single-input instances, at most 400 for the
/// two-dimensional reduction grid of two-input full-FIFO instances.
pub fn grid_optimal_flow(spec: &NodeSpec, resolution: usize) -> Result<GridOptimum, OracleError> {
    spec.validate()?;
    let m = spec.input_count();
    let n = spec.output_count();
    if spec.commodities != 1 || m > 2 || n > 3 {
        return Err(OracleError::TooLarge(format!(
            "{m} x {n} x {} exceeds the 2 x 3 x 1 oracle bound",
            spec.commodities
        )));
    }
    if resolution == 0 {
        return Err(OracleError::TooLarge("resolution must be positive".into()));
    }
    match m {
        1 => {
            if resolution > 50 {
                return Err(OracleError::TooLarge(
                    "per-movement grids support at most 50 steps per dimension".into(),
                ));
            }
            Ok(scan_single_input(spec, resolution))
        }
        _ => {
            if !spec.is_full_fifo() {
                return Err(OracleError::Unsupported(
                    "multi-input grid scan requires full FIFO".into(),
                ));
            }
            if resolution > 400 {
                return Err(OracleError::TooLarge(
                    "reduction grids support at most 400 steps per dimension".into(),
                ));
            }
            Ok(scan_two_inputs(spec, resolution))
        }
    }
}

/// Single input: cartesian product over per-movement flow grids, filtered by
/// supply and the mutual-restriction spillover bounds.
fn scan_single_input(spec: &NodeSpec, resolution: usize) -> GridOptimum {
    let n = spec.output_count();
    let demand: Vec<f64> = (0..n).map(|j| spec.total_oriented_demand(0, j)).collect();
    let movements: Vec<usize> = (0..n).filter(|j| demand[*j] > 0.0).collect();
    let scale = demand.iter().sum::<f64>().max(1.0);
    let eps = TOLERANCE * scale;

    // Per-movement upper bounds from supply and spillover; constant over the
    // scan since the spillover bound uses reduction factors, not flows.
    let mut bound = vec![0.0; n];
    for &j in &movements {
        let mut b = demand[j].min(spec.supply[j]);
        for &jp in &movements {
            if jp == j {
                continue;
            }
            let eta = spec.restriction[0][jp][j];
            let spill =
                (1.0 - eta) * demand[j] + eta * (demand[jp].min(spec.supply[jp]) * demand[j] / demand[jp]);
            b = b.min(spill);
        }
        bound[j] = b;
    }

    let mut best_total = -1.0;
    let mut best = vec![vec![0.0; n]; 1];
    let mut evaluated = 0usize;
    let mut indices = vec![0usize; movements.len()];
    loop {
        let mut total = 0.0;
        let mut feasible = true;
        let mut flows = vec![0.0; n];
        for (k, &j) in movements.iter().enumerate() {
            let f = demand[j] * indices[k] as f64 / resolution as f64;
            if f > bound[j] + eps {
                feasible = false;
                break;
            }
            flows[j] = f;
            total += f;
        }
        evaluated += 1;
        if feasible && total > best_total {
            best_total = total;
            best[0] = flows;
        }
        // Advance the multi-index.
        let mut k = 0;
        loop {
            if k == movements.len() {
                return GridOptimum {
                    total: best_total.max(0.0),
                    flows: best,
                    evaluated,
                };
            }
            indices[k] += 1;
            if indices[k] <= resolution {
                break;
            }
            indices[k] = 0;
            k += 1;
        }
    }
}

/// Two inputs under full FIFO: all feasible allocations lie on the manifold
/// `f_ij = theta_i * S_ij`, so the scan runs over the reduction pair.
fn scan_two_inputs(spec: &NodeSpec, resolution: usize) -> GridOptimum {
    let n = spec.output_count();
    let demand: Vec<Vec<f64>> = (0..2)
        .map(|i| (0..n).map(|j| spec.total_oriented_demand(i, j)).collect())
        .collect();
    let totals: Vec<f64> = (0..2).map(|i| spec.total_demand(i)).collect();
    let scale = totals
        .iter()
        .sum::<f64>()
        .max(spec.supply.iter().fold(0.0_f64, |a, b| a.max(*b)))
        .max(1.0);
    let eps = TOLERANCE * scale;

    // Zero-priority substitution: with no priority anywhere, supply-short
    // inputs compete with equal positive weights.
    let any_positive = spec.priorities.iter().any(|p| *p > 0.0);
    let effective: Vec<f64> = spec
        .priorities
        .iter()
        .map(|p| if any_positive { *p } else { 1.0 })
        .collect();
    let mut oriented = vec![vec![0.0; n]; 2];
    for i in 0..2 {
        if totals[i] > 0.0 {
            for j in 0..n {
                oriented[i][j] = effective[i] * demand[i][j] / totals[i];
            }
        }
    }

    let feasible = |theta: [f64; 2]| -> bool {
        let flow = |i: usize, j: usize| theta[i] * demand[i][j];
        for j in 0..n {
            if flow(0, j) + flow(1, j) > spec.supply[j] + eps {
                return false;
            }
        }
        for i in 0..2 {
            if totals[i] <= 0.0 || theta[i] * totals[i] + eps >= totals[i] {
                continue; // inert or demand-satisfied input
            }
            let other = 1 - i;
            // Restrictor candidates per the pairwise priority comparison.
            let mut restrictors = Vec::new();
            for j in 0..n {
                if demand[i][j] <= 0.0 {
                    continue;
                }
                let lhs = oriented[other][j] * flow(i, j);
                let rhs = oriented[i][j] * flow(other, j);
                if lhs >= rhs - eps * (1.0 + effective[other].max(effective[i])) {
                    restrictors.push(j);
                }
            }
            if restrictors.is_empty() {
                return false; // a supply-short input must be restricted somewhere
            }
            // The entitlement must hold at some restrictor (the input's true
            // bottleneck); one cell of slack keeps the sliver it pins against
            // the supply bound representable on the grid.
            let mut entitled_somewhere = false;
            let mut any_priority = false;
            for &j in &restrictors {
                if oriented[i][j] <= 0.0 {
                    continue;
                }
                let weight = oriented[0][j] + oriented[1][j];
                if weight <= 0.0 {
                    continue;
                }
                any_priority = true;
                let entitled = oriented[i][j] / weight * spec.supply[j];
                let cell = demand[i][j] / resolution as f64;
                if flow(i, j) >= entitled - cell - eps {
                    entitled_somewhere = true;
                    break;
                }
            }
            if any_priority && !entitled_somewhere {
                return false;
            }
        }
        true
    };

    let mut best_total = -1.0;
    let mut best_theta = [0.0, 0.0];
    let mut evaluated = 0usize;
    for a in 0..=resolution {
        for b in 0..=resolution {
            let theta = [a as f64 / resolution as f64, b as f64 / resolution as f64];
            evaluated += 1;
            if feasible(theta) {
                let total = theta[0] * totals[0] + theta[1] * totals[1];
                if total > best_total {
                    best_total = total;
                    best_theta = theta;
                }
            }
        }
    }
    let flows = (0..2)
        .map(|i| (0..n).map(|j| best_theta[i] * demand[i][j]).collect())
        .collect();
    GridOptimum {
        total: best_total.max(0.0),
        flows,
        evaluated,
    }
}
