//! Static scenario description: the network graph, time-varying parameters,
//! demand profiles, initial conditions and control hooks.

use crate::fd::FundamentalDiagram;
use crate::link::LinkKind;
use crate::TOLERANCE;

/// Piecewise-constant time profile: one entry per timestep, or a single
/// entry meaning "constant".
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T>(Vec<T>);

impl<T> Profile<T> {
    pub fn constant(value: T) -> Self {
        Profile(vec![value])
    }

    pub fn per_step(values: Vec<T>) -> Self {
        assert!(!values.is_empty(), "a profile needs at least one entry");
        Profile(values)
    }

    pub fn at(&self, t: usize) -> &T {
        if self.0.len() == 1 {
            &self.0[0]
        } else {
            &self.0[t.min(self.0.len() - 1)]
        }
    }

    /// Number of explicit entries; 1 means constant.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when the profile has an explicit entry for every step in `0..t`.
    pub fn covers(&self, t: usize) -> bool {
        self.0.len() == 1 || self.0.len() >= t
    }

    pub fn entries(&self) -> &[T] {
        &self.0
    }
}

/// One road stretch.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: String,
    pub kind: LinkKind,
    /// Normalized fundamental diagram per timestep.
    pub fd: Profile<FundamentalDiagram>,
}

/// Split ratio of one movement: fixed profile or computed at runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitEntry {
    Known(Profile<f64>),
    Unassigned,
}

/// One junction: ordered input and output links plus solver parameters.
/// The declared ordering defines the input/output indexing used by
/// priorities, split ratios and restriction coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    /// Input priorities; `None` selects capacity-proportional priorities
    /// from the effective input capacities each step.
    pub priorities: Option<Profile<Vec<f64>>>,
    /// Split ratios per input, output and commodity, M x N x C.
    pub split: Vec<Vec<Vec<SplitEntry>>>,
    /// Mutual restriction tensor per timestep, M x N x N
    /// (`[i][restrictor][affected]`).
    pub restriction: Profile<Vec<Vec<Vec<f64>>>>,
}

/// Network graph with a fixed commodity count.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub commodities: usize,
    pub links: Vec<Link>,
    pub nodes: Vec<Node>,
}

/// Initial vehicles and optional metastate for one link.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub vehicles: Vec<f64>,
    /// Congestion metastate; derived from the initial density when absent.
    pub congested: Option<bool>,
}

/// Control hooks: pure per-step transformations of the effective parameters,
/// applied in scenario order so later hooks see earlier overrides.
#[derive(Debug, Clone, PartialEq)]
pub enum Hook {
    /// Scales a link's capacity (ramp metering, incidents, speed policy).
    CapacityScale { link: usize, factor: Profile<f64> },
    /// Replaces a node's input priorities.
    PriorityOverride { node: usize, priorities: Profile<Vec<f64>> },
}

/// A runnable experiment: network, inputs and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: Network,
    /// Demand profile per link; present exactly for origins. Entries are
    /// per-commodity vehicle counts per timestep.
    pub demand: Vec<Option<Profile<Vec<f64>>>>,
    pub initial: Vec<InitialCondition>,
    pub horizon: usize,
    pub hooks: Vec<Hook>,
}

/// A single validation finding; an empty diagnostic list means runnable.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    CflViolation { link: usize, detail: String },
    ShapeViolation { link: usize, detail: String },
    SplitSumViolation { node: usize, input: usize, commodity: usize, sum: f64 },
    RestrictionViolation { node: usize, detail: String },
    GraphInconsistency { detail: String },
    DemandViolation { link: usize, detail: String },
    InitialConditionViolation { link: usize, detail: String },
    ProfileTooShort { what: String, needed: usize, len: usize },
    PriorityViolation { node: usize, detail: String },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::CflViolation { link, detail } => {
                write!(f, "link {link}: CFL violation: {detail}")
            }
            Diagnostic::ShapeViolation { link, detail } => {
                write!(f, "link {link}: fundamental diagram shape violation: {detail}")
            }
            Diagnostic::SplitSumViolation { node, input, commodity, sum } => write!(
                f,
                "node {node}: split ratios of input {input}, commodity {commodity} sum to {sum}"
            ),
            Diagnostic::RestrictionViolation { node, detail } => {
                write!(f, "node {node}: restriction coefficients: {detail}")
            }
            Diagnostic::GraphInconsistency { detail } => write!(f, "graph: {detail}"),
            Diagnostic::DemandViolation { link, detail } => {
                write!(f, "link {link}: demand: {detail}")
            }
            Diagnostic::InitialConditionViolation { link, detail } => {
                write!(f, "link {link}: initial condition: {detail}")
            }
            Diagnostic::ProfileTooShort { what, needed, len } => {
                write!(f, "{what}: profile has {len} entries, horizon needs {needed}")
            }
            Diagnostic::PriorityViolation { node, detail } => {
                write!(f, "node {node}: priorities: {detail}")
            }
        }
    }
}

impl Scenario {
    /// Collects every invariant violation; the scenario is runnable iff the
    /// list is empty.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let net = &self.network;
        let horizon = self.horizon;

        // Link-level checks.
        for (l, link) in net.links.iter().enumerate() {
            if !link.fd.covers(horizon) {
                out.push(Diagnostic::ProfileTooShort {
                    what: format!("fundamental diagram of link {}", link.id),
                    needed: horizon,
                    len: link.fd.len(),
                });
            }
            for fd in link.fd.entries() {
                if let Err(err) = fd.validate() {
                    let detail = err.to_string();
                    match err {
                        crate::fd::FdError::CflViolation { .. } => {
                            out.push(Diagnostic::CflViolation { link: l, detail })
                        }
                        _ => out.push(Diagnostic::ShapeViolation { link: l, detail }),
                    }
                    break;
                }
            }
        }

        // Graph consistency: begin/end node counts by link kind.
        let mut begin = vec![0usize; net.links.len()];
        let mut end = vec![0usize; net.links.len()];
        for node in &net.nodes {
            if node.inputs.is_empty() || node.outputs.is_empty() {
                out.push(Diagnostic::GraphInconsistency {
                    detail: format!("node {} must have at least one input and one output", node.id),
                });
            }
            for &l in &node.inputs {
                if l >= net.links.len() {
                    out.push(Diagnostic::GraphInconsistency {
                        detail: format!("node {} references missing link {l}", node.id),
                    });
                } else {
                    end[l] += 1;
                }
            }
            for &l in &node.outputs {
                if l >= net.links.len() {
                    out.push(Diagnostic::GraphInconsistency {
                        detail: format!("node {} references missing link {l}", node.id),
                    });
                } else {
                    begin[l] += 1;
                }
            }
        }
        for (l, link) in net.links.iter().enumerate() {
            let expected = match link.kind {
                LinkKind::Ordinary => (1, 1),
                LinkKind::Origin => (0, 1),
                LinkKind::Destination => (1, 0),
            };
            if (begin[l], end[l]) != expected {
                out.push(Diagnostic::GraphInconsistency {
                    detail: format!(
                        "link {} ({:?}) has {} begin and {} end nodes, expected {} and {}",
                        link.id, link.kind, begin[l], end[l], expected.0, expected.1
                    ),
                });
            }
        }

        // Node parameters.
        for (nd, node) in net.nodes.iter().enumerate() {
            let m = node.inputs.len();
            let n = node.outputs.len();
            let c = net.commodities;
            if node.split.len() != m
                || node.split.iter().any(|row| row.len() != n)
                || node.split.iter().flatten().any(|cell| cell.len() != c)
            {
                out.push(Diagnostic::GraphInconsistency {
                    detail: format!("node {} split ratios are not {m} x {n} x {c}", node.id),
                });
                continue;
            }
            for i in 0..m {
                for cc in 0..c {
                    let mut sum = 0.0;
                    let mut any_unassigned = false;
                    let mut max_len = 1;
                    for j in 0..n {
                        match &node.split[i][j][cc] {
                            SplitEntry::Unassigned => any_unassigned = true,
                            SplitEntry::Known(profile) => {
                                max_len = max_len.max(profile.len());
                                sum += *profile.at(0);
                                if !profile.covers(horizon) {
                                    out.push(Diagnostic::ProfileTooShort {
                                        what: format!(
                                            "split ratio ({}, input {i}, output {j}, commodity {cc})",
                                            node.id
                                        ),
                                        needed: horizon,
                                        len: profile.len(),
                                    });
                                }
                            }
                        }
                    }
                    // Constant-profile splits must already sum to 1 when all
                    // are known; time-varying ones are checked per step.
                    if !any_unassigned && max_len == 1 && (sum - 1.0).abs() > 1e-6 {
                        out.push(Diagnostic::SplitSumViolation {
                            node: nd,
                            input: i,
                            commodity: cc,
                            sum,
                        });
                    }
                }
            }
            for eta in node.restriction.entries() {
                if eta.len() != m
                    || eta.iter().any(|per_input| {
                        per_input.len() != n || per_input.iter().any(|row| row.len() != n)
                    })
                {
                    out.push(Diagnostic::RestrictionViolation {
                        node: nd,
                        detail: format!("tensor is not {m} x {n} x {n}"),
                    });
                    continue;
                }
                for (i, per_input) in eta.iter().enumerate() {
                    for j in 0..n {
                        if (per_input[j][j] - 1.0).abs() > TOLERANCE {
                            out.push(Diagnostic::RestrictionViolation {
                                node: nd,
                                detail: format!("diagonal of input {i}, output {j} is not 1"),
                            });
                        }
                        for jp in 0..n {
                            let v = per_input[j][jp];
                            if !(0.0..=1.0 + TOLERANCE).contains(&v) {
                                out.push(Diagnostic::RestrictionViolation {
                                    node: nd,
                                    detail: format!("coefficient ({i}, {j}, {jp}) = {v}"),
                                });
                            }
                        }
                    }
                }
            }
            if let Some(priorities) = &node.priorities {
                if !priorities.covers(horizon) {
                    out.push(Diagnostic::ProfileTooShort {
                        what: format!("priorities of node {}", node.id),
                        needed: horizon,
                        len: priorities.len(),
                    });
                }
                for p in priorities.entries() {
                    if p.len() != m {
                        out.push(Diagnostic::PriorityViolation {
                            node: nd,
                            detail: format!("expected {m} entries, got {}", p.len()),
                        });
                    } else if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        out.push(Diagnostic::PriorityViolation {
                            node: nd,
                            detail: "priorities must be finite and nonnegative".into(),
                        });
                    }
                }
            }
        }

        // Demands: exactly the origins, nonnegative, covering the horizon.
        if self.demand.len() != net.links.len() {
            out.push(Diagnostic::GraphInconsistency {
                detail: "demand list length differs from link count".into(),
            });
        } else {
            for (l, link) in net.links.iter().enumerate() {
                match (&self.demand[l], link.kind) {
                    (Some(profile), LinkKind::Origin) => {
                        if !profile.covers(horizon) {
                            out.push(Diagnostic::ProfileTooShort {
                                what: format!("demand of link {}", link.id),
                                needed: horizon,
                                len: profile.len(),
                            });
                        }
                        for d in profile.entries() {
                            if d.len() != net.commodities {
                                out.push(Diagnostic::DemandViolation {
                                    link: l,
                                    detail: "wrong commodity count".into(),
                                });
                                break;
                            }
                            if d.iter().any(|v| !v.is_finite() || *v < 0.0) {
                                out.push(Diagnostic::DemandViolation {
                                    link: l,
                                    detail: "demand must be finite and nonnegative".into(),
                                });
                                break;
                            }
                        }
                    }
                    (None, LinkKind::Origin) => out.push(Diagnostic::DemandViolation {
                        link: l,
                        detail: "origin link needs a demand profile".into(),
                    }),
                    (Some(_), _) => out.push(Diagnostic::DemandViolation {
                        link: l,
                        detail: "only origin links take demand profiles".into(),
                    }),
                    (None, _) => {}
                }
            }
        }

        // Initial conditions within [0, jam density].
        if self.initial.len() != net.links.len() {
            out.push(Diagnostic::GraphInconsistency {
                detail: "initial condition list length differs from link count".into(),
            });
        } else {
            for (l, init) in self.initial.iter().enumerate() {
                if init.vehicles.len() != net.commodities {
                    out.push(Diagnostic::InitialConditionViolation {
                        link: l,
                        detail: "wrong commodity count".into(),
                    });
                    continue;
                }
                let total: f64 = init.vehicles.iter().sum();
                if init.vehicles.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    out.push(Diagnostic::InitialConditionViolation {
                        link: l,
                        detail: "vehicle counts must be finite and nonnegative".into(),
                    });
                } else if total > net.links[l].fd.at(0).jam_density + TOLERANCE {
                    out.push(Diagnostic::InitialConditionViolation {
                        link: l,
                        detail: format!(
                            "initial vehicles {total} exceed jam density {}",
                            net.links[l].fd.at(0).jam_density
                        ),
                    });
                }
            }
        }

        // Hook profiles.
        for hook in &self.hooks {
            match hook {
                Hook::CapacityScale { link, factor } => {
                    if *link >= net.links.len() {
                        out.push(Diagnostic::GraphInconsistency {
                            detail: format!("capacity hook references missing link {link}"),
                        });
                    }
                    if !factor.covers(horizon) {
                        out.push(Diagnostic::ProfileTooShort {
                            what: format!("capacity hook on link {link}"),
                            needed: horizon,
                            len: factor.len(),
                        });
                    }
                }
                Hook::PriorityOverride { node, priorities } => {
                    if *node >= net.nodes.len() {
                        out.push(Diagnostic::GraphInconsistency {
                            detail: format!("priority hook references missing node {node}"),
                        });
                    } else if !priorities.covers(horizon) {
                        out.push(Diagnostic::ProfileTooShort {
                            what: format!("priority hook on node {node}"),
                            needed: horizon,
                            len: priorities.len(),
                        });
                    }
                }
            }
        }
        out
    }
}
