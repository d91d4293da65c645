//! Runtime split-ratio assignment.
//!
//! A scenario may leave some split ratios open: vehicles that can reach
//! their destination through several output links pick one in response to
//! local conditions. This module distributes the unassigned portion of each
//! input's split ratios so that output links stay as uniformly loaded as
//! possible, measured by oriented demand-to-supply ratios.

use crate::TOLERANCE;
use thiserror::Error;

/// A node whose split ratios are only partially known.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSplitSpec {
    pub commodities: usize,
    /// Demand per input and commodity, M x C.
    pub demand: Vec<Vec<f64>>,
    /// Input priorities, normalized to sum to 1.
    pub priorities: Vec<f64>,
    /// Supply per output, N entries.
    pub supply: Vec<f64>,
    /// Known split ratios; `None` marks movements to be computed.
    pub known: Vec<Vec<Vec<Option<f64>>>>,
}

impl PartialSplitSpec {
    pub fn input_count(&self) -> usize {
        self.demand.len()
    }

    pub fn output_count(&self) -> usize {
        self.supply.len()
    }

    fn validate(&self) -> Result<(), AssignError> {
        let m = self.input_count();
        let n = self.output_count();
        let c = self.commodities;
        if m == 0 || n == 0 {
            return Err(AssignError::InvalidSpec("empty node".into()));
        }
        if self.known.len() != m || self.priorities.len() != m {
            return Err(AssignError::InvalidSpec("input dimension mismatch".into()));
        }
        let psum: f64 = self.priorities.iter().sum();
        if self.priorities.iter().any(|p| *p < 0.0) || (psum - 1.0).abs() > 1e-6 {
            return Err(AssignError::InvalidSpec(format!(
                "priorities must be nonnegative and sum to 1, got sum {psum}"
            )));
        }
        for i in 0..m {
            if self.demand[i].len() != c || self.known[i].len() != n {
                return Err(AssignError::InvalidSpec("shape mismatch".into()));
            }
            if self.demand[i].iter().any(|d| !d.is_finite() || *d < 0.0) {
                return Err(AssignError::InvalidSpec("negative demand".into()));
            }
            for j in 0..n {
                if self.known[i][j].len() != c {
                    return Err(AssignError::InvalidSpec("shape mismatch".into()));
                }
            }
            for cc in 0..c {
                let mut sum = 0.0;
                for j in 0..n {
                    if let Some(b) = self.known[i][j][cc] {
                        if !(0.0..=1.0 + TOLERANCE).contains(&b) {
                            return Err(AssignError::InvalidSpec(format!(
                                "known split ({i}, {j}, {cc}) = {b} out of [0, 1]"
                            )));
                        }
                        sum += b;
                    }
                }
                if sum > 1.0 + 1e-6 {
                    return Err(AssignError::InvalidSpec(format!(
                        "known splits of input {i}, commodity {cc} sum to {sum} > 1"
                    )));
                }
            }
        }
        if self.supply.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(AssignError::InvalidSpec("negative supply".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AssignError {
    #[error("invalid split assignment spec: {0}")]
    InvalidSpec(String),
    #[error("split assignment failed to converge within the iteration bound")]
    NoConvergence,
}

/// Replaces zero priorities with a uniform floor so that no input is ignored
/// during assignment: the zero-priority inputs share `|zeros| / M` of the
/// total mass uniformly, the rest keep their proportions.
pub fn regularize_priorities(priorities: &[f64]) -> Vec<f64> {
    let m = priorities.len() as f64;
    let zeros = priorities.iter().filter(|p| **p == 0.0).count() as f64;
    priorities
        .iter()
        .map(|p| p * (m - zeros) / m + zeros / (m * m))
        .collect()
}

/// One loop iteration of [`assign_split_ratios`], for inspection by tests.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignRound {
    pub index: usize,
    /// Least-loaded output chosen this round.
    pub output: usize,
    pub input: usize,
    pub commodity: usize,
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// Split increment granted; `None` when the round closed the input's
    /// remaining mass by supply-proportional distribution.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssignTrace {
    pub rounds: Vec<AssignRound>,
}

/// Completes the split ratios, discarding the trace.
pub fn assign_split_ratios(spec: &PartialSplitSpec) -> Result<Vec<Vec<Vec<f64>>>, AssignError> {
    assign_split_ratios_traced(spec).map(|(beta, _)| beta)
}

/// Completes the split ratios of a node so that every `(input, commodity)`
/// pair with demand has ratios summing to 1, never touching known entries.
pub fn assign_split_ratios_traced(
    spec: &PartialSplitSpec,
) -> Result<(Vec<Vec<Vec<f64>>>, AssignTrace), AssignError> {
    spec.validate()?;
    let m = spec.input_count();
    let n = spec.output_count();
    let c = spec.commodities;

    let mut beta = vec![vec![vec![0.0; c]; n]; m];
    for i in 0..m {
        for j in 0..n {
            for cc in 0..c {
                if let Some(b) = spec.known[i][j][cc] {
                    beta[i][j][cc] = b;
                }
            }
        }
    }

    // Unassigned mass and the outputs it can go to, after trivial cases are
    // settled: zero-demand pairs and dead outputs get uniform or zero shares,
    // and a single open movement takes the whole remainder.
    let mut remaining = vec![vec![0.0; c]; m];
    let mut open: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); c]; m];
    for i in 0..m {
        for cc in 0..c {
            let unknown: Vec<usize> = (0..n).filter(|j| spec.known[i][*j][cc].is_none()).collect();
            if unknown.is_empty() {
                continue;
            }
            let known_sum: f64 = (0..n).filter_map(|j| spec.known[i][j][cc]).sum();
            let mass = (1.0 - known_sum).max(0.0);
            if mass <= TOLERANCE {
                continue; // nothing left to distribute; open entries stay 0
            }
            if spec.demand[i][cc] == 0.0 {
                // No traffic: any completion works, spread uniformly.
                for &j in &unknown {
                    beta[i][j][cc] = mass / unknown.len() as f64;
                }
                continue;
            }
            let alive: Vec<usize> = unknown
                .iter()
                .copied()
                .filter(|j| spec.supply[*j] > 0.0)
                .collect();
            if alive.is_empty() {
                for &j in &unknown {
                    beta[i][j][cc] = mass / unknown.len() as f64;
                }
                continue;
            }
            if alive.len() == 1 {
                beta[i][alive[0]][cc] = mass;
                continue;
            }
            remaining[i][cc] = mass;
            open[i][cc] = alive;
        }
    }

    // Fixed index sets of the balancing loop.
    let feeders: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            (0..m)
                .filter(|i| (0..c).any(|cc| open[*i][cc].contains(&j)))
                .collect()
        })
        .collect();
    let regular = regularize_priorities(&spec.priorities);

    let mut pending: Vec<Vec<usize>> = feeders.clone(); // remaining inputs per output
    let mut trace = AssignTrace::default();
    let iteration_cap = 64 * (m * n * c + 1);

    for round in 0..=iteration_cap {
        pending
            .iter_mut()
            .for_each(|list| list.retain(|i| (0..c).any(|cc| remaining[*i][cc] > 0.0)));
        let live_outputs: Vec<usize> = (0..n).filter(|j| !pending[*j].is_empty()).collect();
        if live_outputs.is_empty() {
            return Ok((beta, trace));
        }
        if round == iteration_cap {
            return Err(AssignError::NoConvergence);
        }

        // Working oriented demand and priorities; the priority complement
        // spreads the unassigned mass evenly over the movement's open outputs.
        let mut oriented_demand = vec![vec![0.0; n]; m];
        let mut oriented_priority = vec![vec![0.0; n]; m];
        for i in 0..m {
            let total: f64 = spec.demand[i].iter().sum();
            for j in 0..n {
                oriented_demand[i][j] =
                    (0..c).map(|cc| beta[i][j][cc] * spec.demand[i][cc]).sum();
                if total > 0.0 {
                    let weighted: f64 = (0..c)
                        .map(|cc| {
                            let gamma = if spec.known[i][j][cc].is_none()
                                && open[i][cc].contains(&j)
                            {
                                beta[i][j][cc] + remaining[i][cc] / open[i][cc].len() as f64
                            } else {
                                beta[i][j][cc]
                            };
                            gamma * spec.demand[i][cc]
                        })
                        .sum();
                    oriented_priority[i][j] = regular[i] * weighted / total;
                }
            }
        }
        // Loading of movement (i, j): its oriented demand per unit of the
        // supply share its priority claims, scaled by the output's total
        // priority weight. Zero demand reads as zero loading.
        let priority_weight: Vec<f64> = (0..n)
            .map(|j| feeders[j].iter().map(|i| oriented_priority[*i][j]).sum())
            .collect();
        let loading = |i: usize, j: usize| -> Option<f64> {
            let demand = oriented_demand[i][j];
            if demand <= 0.0 {
                return Some(0.0);
            }
            let denom = oriented_priority[i][j] * spec.supply[j];
            if denom <= 0.0 {
                return None; // movement can hold no flow; out of consideration
            }
            Some(demand / denom * priority_weight[j])
        };

        let mut mu_plus = f64::NEG_INFINITY;
        for &j in &live_outputs {
            for &i in &pending[j] {
                if let Some(r) = loading(i, j) {
                    mu_plus = mu_plus.max(r);
                }
            }
        }
        if !mu_plus.is_finite() {
            return Err(AssignError::NoConvergence);
        }

        // Least-loaded output: the candidate pool spans every feeder of the
        // output so that fully assigned inputs still mark their output's
        // loading floor; ties break to the smaller total demand-supply ratio.
        let mut y_min = f64::INFINITY;
        let mut per_output_min = vec![f64::INFINITY; n];
        for &j in &live_outputs {
            for &i in &feeders[j] {
                if let Some(r) = loading(i, j) {
                    per_output_min[j] = per_output_min[j].min(r);
                }
            }
            y_min = y_min.min(per_output_min[j]);
        }
        let mut chosen_output = usize::MAX;
        let mut chosen_ratio = f64::INFINITY;
        for &j in &live_outputs {
            if per_output_min[j] <= y_min + TOLERANCE * (1.0 + y_min.abs()) {
                let total: f64 = (0..m).map(|i| oriented_demand[i][j]).sum();
                let ratio = if spec.supply[j] > 0.0 {
                    total / spec.supply[j]
                } else {
                    f64::INFINITY
                };
                if ratio < chosen_ratio - TOLERANCE {
                    chosen_ratio = ratio;
                    chosen_output = j;
                }
            }
        }
        let jm = chosen_output;

        // Least-loaded pending input at that output, then the commodity with
        // the least unallocated demand.
        let mut w_min = f64::INFINITY;
        for &i in &pending[jm] {
            if let Some(r) = loading(i, jm) {
                w_min = w_min.min(r);
            }
        }
        let mut chosen = None;
        let mut chosen_unallocated = f64::INFINITY;
        for &i in &pending[jm] {
            match loading(i, jm) {
                Some(r) if r <= w_min + TOLERANCE * (1.0 + w_min.abs()) => {}
                _ => continue,
            }
            for cc in 0..c {
                if remaining[i][cc] > 0.0 {
                    let unallocated = remaining[i][cc] * spec.demand[i][cc];
                    if unallocated < chosen_unallocated - TOLERANCE {
                        chosen_unallocated = unallocated;
                        chosen = Some((i, cc));
                    }
                }
            }
        }
        let Some((im, cm)) = chosen else {
            return Err(AssignError::NoConvergence);
        };
        let mu_minus = loading(im, jm).unwrap_or(0.0);

        let mut record = AssignRound {
            index: round,
            output: jm,
            input: im,
            commodity: cm,
            mu_plus,
            mu_minus,
            delta: None,
        };

        if (mu_plus - mu_minus).abs() <= 1e-9 * mu_plus.abs().max(1.0) {
            // Loading is balanced: close this pair by distributing its mass
            // in proportion to allocated supply across its live open outputs.
            let targets: Vec<usize> = open[im][cm]
                .iter()
                .copied()
                .filter(|j| live_outputs.contains(j))
                .collect();
            let targets = if targets.is_empty() {
                open[im][cm].clone()
            } else {
                targets
            };
            let denom: f64 = targets
                .iter()
                .map(|j| oriented_priority[im][*j] * spec.supply[*j])
                .sum();
            for &j in &targets {
                let share = if denom > 0.0 {
                    oriented_priority[im][j] * spec.supply[j] / denom
                } else {
                    1.0 / targets.len() as f64
                };
                beta[im][j][cm] += share * remaining[im][cm];
            }
            remaining[im][cm] = 0.0;
        } else {
            let unallocated = remaining[im][cm] * spec.demand[im][cm];
            let headroom = mu_plus * oriented_priority[im][jm] * spec.supply[jm]
                / (unallocated * priority_weight[jm])
                - oriented_demand[im][jm] / unallocated;
            let delta = remaining[im][cm].min(headroom.max(0.0));
            beta[im][jm][cm] += delta;
            remaining[im][cm] -= delta;
            if remaining[im][cm] < 1e-12 {
                remaining[im][cm] = 0.0;
            }
            record.delta = Some(delta);
        }
        trace.rounds.push(record);
    }
    unreachable!("loop exits through the live-outputs check")
}
