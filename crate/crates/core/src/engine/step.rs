//! Per-step orchestration and the run loop.

use super::network::{Diagnostic, Hook, Scenario, SplitEntry};
use crate::assign::{assign_split_ratios, AssignError, PartialSplitSpec};
use crate::fd::{FdError, FundamentalDiagram};
use crate::link::{
    destination_outflow, receive, send, speed, update_state, LinkError, LinkKind, LinkState,
    Supply,
};
use crate::node::{solve_mimo_relaxed, FlowSolution, NodeError, NodeSpec};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("scenario failed validation with {} diagnostic(s)", .0.len())]
    Validation(Vec<Diagnostic>),
    #[error("cannot step past the horizon ({horizon}) from t = {t}")]
    HorizonExceeded { t: usize, horizon: usize },
    #[error("link {link}, step {t}: {source}")]
    Parameter {
        link: String,
        t: usize,
        source: FdError,
    },
    #[error("link {link}, step {t}: {source}")]
    Link {
        link: String,
        t: usize,
        source: LinkError,
    },
    #[error("node {node}, step {t}: {source}")]
    Node {
        node: String,
        t: usize,
        source: NodeError,
    },
    #[error("node {node}, step {t}: split assignment failed: {source}")]
    Assign {
        node: String,
        t: usize,
        source: AssignError,
    },
}

/// Node-level outcome of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStepInfo {
    /// Split ratios in effect (profile values plus runtime assignments).
    pub split: Vec<Vec<Vec<f64>>>,
    /// True when some ratios were computed at runtime this step.
    pub assigned: bool,
    pub solution: FlowSolution,
}

/// Flows and speeds of one executed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Inflow per link and commodity during the step.
    pub inflow: Vec<Vec<f64>>,
    /// Outflow per link and commodity during the step.
    pub outflow: Vec<Vec<f64>>,
    /// Speed per link, from the pre-step state and the step's outflow.
    pub speed: Vec<f64>,
    /// Link supplies in effect during the step (origins excluded).
    pub supply: Vec<Option<f64>>,
    pub nodes: Vec<NodeStepInfo>,
}

/// Simulation state after `t` steps; carries the records of the step that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: usize,
    pub links: Vec<LinkState>,
    /// Vehicles that left through each destination so far, per commodity.
    pub exited: Vec<Vec<f64>>,
    /// Flows of the previous step; `None` for the initial state.
    pub last_step: Option<StepRecord>,
}

impl SimState {
    /// Initial state of a scenario: configured vehicle counts with the
    /// metastate taken from the scenario or derived from the density.
    pub fn initial(scenario: &Scenario) -> Self {
        let links = scenario
            .initial
            .iter()
            .zip(&scenario.network.links)
            .map(|(init, link)| {
                let congested = init.congested.unwrap_or_else(|| {
                    let total: f64 = init.vehicles.iter().sum();
                    match link.fd.at(0).critical_densities() {
                        // Densities inside the two-valued band default to the
                        // free-flow branch.
                        Ok((low, high)) => total > high && total > low,
                        Err(_) => false,
                    }
                });
                LinkState::new(init.vehicles.clone(), congested)
            })
            .collect();
        SimState {
            t: 0,
            links,
            exited: vec![vec![0.0; scenario.network.commodities]; scenario.network.links.len()],
            last_step: None,
        }
    }

    /// Total vehicles currently inside the network.
    pub fn vehicles_in_network(&self) -> f64 {
        self.links.iter().map(|l| l.total()).sum()
    }

    /// Total vehicles that have left through destinations.
    pub fn vehicles_exited(&self) -> f64 {
        self.exited.iter().flatten().sum()
    }
}

/// States 0..=T of one run; state `k` carries the record of step `k - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<SimState>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }

    /// Record of step `t` (the transition from state `t` to `t + 1`).
    pub fn step_record(&self, t: usize) -> &StepRecord {
        self.states[t + 1]
            .last_step
            .as_ref()
            .expect("every non-initial state carries its step record")
    }
}

/// Effective per-step parameters after control hooks.
struct Effective {
    fd: Vec<FundamentalDiagram>,
    priority_override: Vec<Option<Vec<f64>>>,
}

fn effective_params(scenario: &Scenario, t: usize) -> Result<Effective, EngineError> {
    let net = &scenario.network;
    let mut fd: Vec<FundamentalDiagram> = net.links.iter().map(|l| *l.fd.at(t)).collect();
    let mut priority_override = vec![None; net.nodes.len()];
    for hook in &scenario.hooks {
        match hook {
            Hook::CapacityScale { link, factor } => {
                fd[*link] = fd[*link].with_capacity_scaled(*factor.at(t));
            }
            Hook::PriorityOverride { node, priorities } => {
                priority_override[*node] = Some(priorities.at(t).clone());
            }
        }
    }
    for (l, diagram) in fd.iter().enumerate() {
        diagram.validate().map_err(|source| EngineError::Parameter {
            link: net.links[l].id.clone(),
            t,
            source,
        })?;
    }
    Ok(Effective {
        fd,
        priority_override,
    })
}

/// Executes one step: control hooks, send/receive, split assignment, node
/// solves, boundary flows, conservation and metastate update.
pub fn step(scenario: &Scenario, state: &SimState) -> Result<SimState, EngineError> {
    let net = &scenario.network;
    let t = state.t;
    if t >= scenario.horizon {
        return Err(EngineError::HorizonExceeded {
            t,
            horizon: scenario.horizon,
        });
    }
    let params = effective_params(scenario, t)?;

    // Phase 1: send and receive per link, embarrassingly parallel.
    let sends: Vec<Vec<f64>> = net
        .links
        .par_iter()
        .enumerate()
        .map(|(l, link)| {
            let demand = scenario.demand[l].as_ref().map(|p| p.at(t).as_slice());
            send(&state.links[l], &params.fd[l], link.kind, demand).map_err(|source| {
                EngineError::Link {
                    link: link.id.clone(),
                    t,
                    source,
                }
            })
        })
        .collect::<Result<_, _>>()?;
    let receives: Vec<Supply> = net
        .links
        .par_iter()
        .enumerate()
        .map(|(l, link)| receive(&state.links[l], &params.fd[l], link.kind))
        .collect();

    // Phase 2: split assignment and flow solve per node, parallel.
    let node_results: Vec<NodeStepInfo> = net
        .nodes
        .par_iter()
        .enumerate()
        .map(|(nd, node)| solve_node(scenario, &params, &sends, &receives, t, nd, node))
        .collect::<Result<_, _>>()?;

    // Phase 3: boundary flows and the conservation update, single joined pass.
    let mut begin_of = vec![None; net.links.len()]; // (node, output position)
    let mut end_of = vec![None; net.links.len()]; // (node, input position)
    for (nd, node) in net.nodes.iter().enumerate() {
        for (pos, &l) in node.outputs.iter().enumerate() {
            begin_of[l] = Some((nd, pos));
        }
        for (pos, &l) in node.inputs.iter().enumerate() {
            end_of[l] = Some((nd, pos));
        }
    }

    let c = net.commodities;
    let mut inflow = vec![vec![0.0; c]; net.links.len()];
    let mut outflow = vec![vec![0.0; c]; net.links.len()];
    for (l, link) in net.links.iter().enumerate() {
        match link.kind {
            LinkKind::Origin => {
                inflow[l] = scenario.demand[l]
                    .as_ref()
                    .expect("validated: origins carry demand")
                    .at(t)
                    .clone();
            }
            _ => {
                if let Some((nd, j)) = begin_of[l] {
                    let solution = &node_results[nd].solution;
                    for i in 0..net.nodes[nd].inputs.len() {
                        for cc in 0..c {
                            inflow[l][cc] += solution.flows[i][j][cc];
                        }
                    }
                }
            }
        }
        match link.kind {
            LinkKind::Destination => {
                outflow[l] = destination_outflow(&state.links[l], &params.fd[l]);
            }
            _ => {
                if let Some((nd, i)) = end_of[l] {
                    let solution = &node_results[nd].solution;
                    for j in 0..net.nodes[nd].outputs.len() {
                        for cc in 0..c {
                            outflow[l][cc] += solution.flows[i][j][cc];
                        }
                    }
                }
            }
        }
    }

    let mut links = Vec::with_capacity(net.links.len());
    let mut exited = state.exited.clone();
    let mut speeds = vec![0.0; net.links.len()];
    for (l, link) in net.links.iter().enumerate() {
        let next = update_state(&state.links[l], &params.fd[l], &inflow[l], &outflow[l])
            .map_err(|source| EngineError::Link {
                link: link.id.clone(),
                t,
                source,
            })?;
        speeds[l] = speed(&state.links[l], &outflow[l], &params.fd[l]);
        if link.kind == LinkKind::Destination {
            for cc in 0..c {
                exited[l][cc] += outflow[l][cc];
            }
        }
        links.push(next);
    }

    Ok(SimState {
        t: t + 1,
        links,
        exited,
        last_step: Some(StepRecord {
            inflow,
            outflow,
            speed: speeds,
            supply: receives.iter().map(|s| s.finite()).collect(),
            nodes: node_results,
        }),
    })
}

fn solve_node(
    scenario: &Scenario,
    params: &Effective,
    sends: &[Vec<f64>],
    receives: &[Supply],
    t: usize,
    nd: usize,
    node: &super::network::Node,
) -> Result<NodeStepInfo, EngineError> {
    let net = &scenario.network;
    let c = net.commodities;
    let m = node.inputs.len();
    let n = node.outputs.len();
    let node_err = |source: NodeError| EngineError::Node {
        node: node.id.clone(),
        t,
        source,
    };

    let demand: Vec<Vec<f64>> = node.inputs.iter().map(|&l| sends[l].clone()).collect();
    let supply: Vec<f64> = node
        .outputs
        .iter()
        .map(|&l| {
            receives[l]
                .finite()
                .expect("validated: origins are never node outputs")
        })
        .collect();
    let priorities: Vec<f64> = match (&params.priority_override[nd], &node.priorities) {
        (Some(p), _) => p.clone(),
        (None, Some(profile)) => profile.at(t).clone(),
        // Default: capacity-proportional, read off the effective diagrams.
        (None, None) => node.inputs.iter().map(|&l| params.fd[l].capacity).collect(),
    };
    if priorities.len() != m {
        return Err(node_err(NodeError::InvalidSpec(
            "priority vector length differs from input count".into(),
        )));
    }

    let mut split = vec![vec![vec![0.0; c]; n]; m];
    let mut assigned = false;
    let mut has_unassigned = false;
    for i in 0..m {
        for j in 0..n {
            for cc in 0..c {
                match &node.split[i][j][cc] {
                    SplitEntry::Known(profile) => split[i][j][cc] = *profile.at(t),
                    SplitEntry::Unassigned => has_unassigned = true,
                }
            }
        }
    }
    if has_unassigned {
        let total_priority: f64 = priorities.iter().sum();
        let normalized: Vec<f64> = if total_priority > 0.0 {
            priorities.iter().map(|p| p / total_priority).collect()
        } else {
            vec![1.0 / m as f64; m]
        };
        let partial = PartialSplitSpec {
            commodities: c,
            demand: demand.clone(),
            priorities: normalized,
            supply: supply.clone(),
            known: (0..m)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            (0..c)
                                .map(|cc| match &node.split[i][j][cc] {
                                    SplitEntry::Known(profile) => Some(*profile.at(t)),
                                    SplitEntry::Unassigned => None,
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        };
        split = assign_split_ratios(&partial).map_err(|source| EngineError::Assign {
            node: node.id.clone(),
            t,
            source,
        })?;
        assigned = true;
    }

    let spec = NodeSpec {
        commodities: c,
        demand,
        split: split.clone(),
        priorities,
        supply,
        restriction: node.restriction.at(t).clone(),
    };
    let solution = solve_mimo_relaxed(&spec).map_err(node_err)?;
    Ok(NodeStepInfo {
        split,
        assigned,
        solution,
    })
}

/// Runs the scenario start to finish on the ambient thread pool.
pub fn run(scenario: &Scenario) -> Result<Trajectory, EngineError> {
    let diagnostics = scenario.validate();
    if !diagnostics.is_empty() {
        return Err(EngineError::Validation(diagnostics));
    }
    let mut states = Vec::with_capacity(scenario.horizon + 1);
    states.push(SimState::initial(scenario));
    for _ in 0..scenario.horizon {
        let next = step(scenario, states.last().unwrap())?;
        states.push(next);
    }
    Ok(Trajectory { states })
}

/// Runs the scenario on a dedicated pool with the given worker count.
/// The trajectory is identical for any worker count.
pub fn run_with_threads(scenario: &Scenario, threads: usize) -> Result<Trajectory, EngineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool construction");
    pool.install(|| run(scenario))
}

/// Network-wide vehicle balance of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub initial: f64,
    pub injected: f64,
    pub exited: f64,
    pub final_in_network: f64,
    /// |initial + injected - exited - final| / max(1, initial + injected).
    pub relative_error: f64,
}

/// Telescopes the conservation equation over a trajectory.
pub fn conservation_audit(scenario: &Scenario, trajectory: &Trajectory) -> AuditReport {
    let initial = trajectory.states[0].vehicles_in_network();
    let mut injected = 0.0;
    for t in 0..trajectory.horizon() {
        for demand in scenario.demand.iter().flatten() {
            injected += demand.at(t).iter().sum::<f64>();
        }
    }
    let last = trajectory.states.last().unwrap();
    let exited = last.vehicles_exited();
    let final_in_network = last.vehicles_in_network();
    let balance = initial + injected - exited - final_in_network;
    AuditReport {
        initial,
        injected,
        exited,
        final_in_network,
        relative_error: balance.abs() / (initial + injected).max(1.0),
    }
}
