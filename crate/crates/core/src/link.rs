//! Single-link dynamics: vehicle counts, congestion metastate, send and
//! receive functions, conservation update and speed.

use crate::fd::FundamentalDiagram;
use crate::TOLERANCE;
use thiserror::Error;

/// Role of a link in the network graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// Has both a begin and an end node.
    Ordinary,
    /// No begin node; vehicles enter the system here.
    Origin,
    /// No end node; vehicles leave the system here.
    Destination,
}

/// Per-commodity vehicle counts plus the binary congestion metastate.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    /// Vehicles of each commodity currently in the link.
    pub vehicles: Vec<f64>,
    /// Congestion metastate: true once the link has entered the congested
    /// regime, cleared only when density falls to the low critical density.
    pub congested: bool,
}

impl LinkState {
    pub fn new(vehicles: Vec<f64>, congested: bool) -> Self {
        LinkState { vehicles, congested }
    }

    /// All-empty state for `commodities` vehicle classes.
    pub fn empty(commodities: usize) -> Self {
        LinkState {
            vehicles: vec![0.0; commodities],
            congested: false,
        }
    }

    /// Total vehicles across commodities.
    pub fn total(&self) -> f64 {
        self.vehicles.iter().sum()
    }
}

/// What a link can accept this timestep.
///
/// Origins are unbounded buffers; an explicit variant avoids infinity
/// arithmetic leaking into the node solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Supply {
    Finite(f64),
    Unbounded,
}

impl Supply {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Supply::Finite(v) => Some(*v),
            Supply::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinkError {
    #[error("negative density: commodity {commodity} would hold {value} vehicles")]
    NegativeDensity { commodity: usize, value: f64 },
    #[error("origin links require a demand vector for the send function")]
    MissingDemand,
}

/// Flow a link offers to discharge this timestep, per commodity.
///
/// Ordinary and destination links send from their current state; origins
/// send their exogenous demand, capacity-capped. An empty link (or zero
/// demand) sends the zero vector.
pub fn send(
    state: &LinkState,
    fd: &FundamentalDiagram,
    kind: LinkKind,
    demand: Option<&[f64]>,
) -> Result<Vec<f64>, LinkError> {
    match kind {
        LinkKind::Ordinary | LinkKind::Destination => {
            let total = state.total();
            let free = fd.free_flow_speed * total;
            let scale = if free > fd.capacity && free > 0.0 {
                fd.capacity / free
            } else {
                1.0
            };
            Ok(state
                .vehicles
                .iter()
                .map(|n| fd.free_flow_speed * n * scale)
                .collect())
        }
        LinkKind::Origin => {
            let demand = demand.ok_or(LinkError::MissingDemand)?;
            let total: f64 = demand.iter().sum();
            let scale = if total > fd.capacity && total > 0.0 {
                fd.capacity / total
            } else {
                1.0
            };
            Ok(demand.iter().map(|d| d * scale).collect())
        }
    }
}

/// Flow a link can accept this timestep.
///
/// Capacity-bounded in free flow, jam-gap-bounded in congestion; origins are
/// unbounded. A congested link already past jam density supplies zero rather
/// than a negative value.
pub fn receive(state: &LinkState, fd: &FundamentalDiagram, kind: LinkKind) -> Supply {
    match kind {
        LinkKind::Origin => Supply::Unbounded,
        LinkKind::Ordinary | LinkKind::Destination => {
            let r = if state.congested {
                (fd.congestion_wave_speed * (fd.jam_density - state.total())).max(0.0)
            } else {
                fd.capacity
            };
            Supply::Finite(r)
        }
    }
}

/// Congestion metastate update with hysteresis.
///
/// Switches on strictly above the high critical density, off at or below the
/// low critical density, and persists in between.
pub fn update_metastate(previous: bool, total_vehicles: f64, fd: &FundamentalDiagram) -> bool {
    let (low, high) = match fd.critical_densities() {
        Ok(pair) => pair,
        // Degenerate diagram: no free-flow branch, treat the thresholds as 0.
        Err(_) => (0.0, 0.0),
    };
    if total_vehicles <= low {
        false
    } else if total_vehicles > high {
        true
    } else {
        previous
    }
}

/// Conservation update: `n' = n + inflow - outflow`, metastate recomputed.
pub fn update_state(
    state: &LinkState,
    fd: &FundamentalDiagram,
    inflow: &[f64],
    outflow: &[f64],
) -> Result<LinkState, LinkError> {
    let mut vehicles = Vec::with_capacity(state.vehicles.len());
    for (c, n) in state.vehicles.iter().enumerate() {
        let next = n + inflow[c] - outflow[c];
        if next < -TOLERANCE {
            return Err(LinkError::NegativeDensity {
                commodity: c,
                value: next,
            });
        }
        vehicles.push(next.max(0.0));
    }
    let total = vehicles.iter().sum();
    let congested = update_metastate(state.congested, total, fd);
    Ok(LinkState { vehicles, congested })
}

/// Outflow of a destination link: free-flow discharge, capacity-capped,
/// split over commodities in proportion to their presence.
pub fn destination_outflow(state: &LinkState, fd: &FundamentalDiagram) -> Vec<f64> {
    // Same expression as the send function of an ordinary link.
    send(state, fd, LinkKind::Destination, None).expect("destination send takes no demand")
}

/// Traffic speed: total outflow over total vehicles, free-flow speed when empty.
pub fn speed(state: &LinkState, total_outflow: &[f64], fd: &FundamentalDiagram) -> f64 {
    let n = state.total();
    if n > 0.0 {
        let f: f64 = total_outflow.iter().sum();
        f / n
    } else {
        fd.free_flow_speed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fd(capacity: f64, vf: f64, w: f64, jam: f64) -> FundamentalDiagram {
        FundamentalDiagram {
            capacity,
            free_flow_speed: vf,
            congestion_wave_speed: w,
            jam_density: jam,
        }
    }

    #[test]
    fn send_uncongested_single_commodity() {
        let state = LinkState::new(vec![30.0], false);
        let s = send(&state, &fd(40.0, 1.0, 0.25, 200.0), LinkKind::Ordinary, None).unwrap();
        assert_eq!(s, vec![30.0]);
    }

    #[test]
    fn send_scales_commodities_proportionally() {
        let state = LinkState::new(vec![30.0, 30.0], false);
        let s = send(&state, &fd(40.0, 1.0, 0.25, 200.0), LinkKind::Ordinary, None).unwrap();
        assert_relative_eq!(s[0], 20.0, max_relative = 1e-12);
        assert_relative_eq!(s[1], 20.0, max_relative = 1e-12);
    }

    #[test]
    fn send_origin_scales_demand_to_capacity() {
        let state = LinkState::empty(2);
        let s = send(
            &state,
            &fd(12.0, 1.0, 0.25, 200.0),
            LinkKind::Origin,
            Some(&[10.0, 5.0]),
        )
        .unwrap();
        assert_relative_eq!(s[0], 8.0, max_relative = 1e-12);
        assert_relative_eq!(s[1], 4.0, max_relative = 1e-12);
    }

    #[test]
    fn send_empty_link_is_zero() {
        let state = LinkState::empty(3);
        let s = send(&state, &fd(40.0, 1.0, 0.25, 200.0), LinkKind::Ordinary, None).unwrap();
        assert_eq!(s, vec![0.0; 3]);
    }

    #[test]
    fn send_origin_without_demand_errors() {
        let state = LinkState::empty(1);
        let err = send(&state, &fd(40.0, 1.0, 0.25, 200.0), LinkKind::Origin, None).unwrap_err();
        assert_eq!(err, LinkError::MissingDemand);
    }

    #[test]
    fn receive_free_flow_is_capacity() {
        let state = LinkState::new(vec![120.0], false);
        let r = receive(&state, &fd(40.0, 1.0, 0.25, 200.0), LinkKind::Ordinary);
        assert_eq!(r, Supply::Finite(40.0));
    }

    #[test]
    fn receive_congested_is_jam_gap() {
        let state = LinkState::new(vec![80.0], true);
        let r = receive(&state, &fd(40.0, 1.0, 0.25, 200.0), LinkKind::Ordinary);
        assert_eq!(r, Supply::Finite(30.0));
    }

    #[test]
    fn receive_origin_unbounded() {
        let state = LinkState::empty(1);
        let r = receive(&state, &fd(40.0, 1.0, 0.25, 200.0), LinkKind::Origin);
        assert_eq!(r, Supply::Unbounded);
    }

    #[test]
    fn receive_past_jam_clamps_to_zero() {
        let state = LinkState::new(vec![250.0], true);
        let r = receive(&state, &fd(40.0, 1.0, 0.25, 200.0), LinkKind::Ordinary);
        assert_eq!(r, Supply::Finite(0.0));
    }

    #[test]
    fn metastate_three_cases() {
        let d = fd(50.0, 1.0, 0.25, 200.0); // n- = 40, n+ = 50
        assert!(!update_metastate(true, 35.0, &d));
        assert!(update_metastate(false, 55.0, &d));
        assert!(update_metastate(true, 45.0, &d)); // hysteresis persists
        assert!(!update_metastate(false, 45.0, &d));
    }

    #[test]
    fn metastate_hysteresis_sweep() {
        let d = fd(50.0, 1.0, 0.25, 200.0);
        let mut theta = false;
        let mut trace = Vec::new();
        // Rise from 0 past n+, then drain back below n-.
        let densities: Vec<f64> = (0..=60)
            .map(|k| k as f64)
            .chain((0..=60).rev().map(|k| k as f64))
            .collect();
        for n in &densities {
            theta = update_metastate(theta, *n, &d);
            trace.push((*n, theta));
        }
        for (n, th) in &trace {
            if *n > 50.0 {
                assert!(*th, "theta must be on above n+ at n = {n}");
            }
            if *n <= 40.0 {
                assert!(!*th, "theta must be off at or below n- at n = {n}");
            }
        }
        // Band samples took both values at different times: hysteresis.
        let band: Vec<bool> = trace
            .iter()
            .filter(|(n, _)| *n > 40.0 && *n <= 50.0)
            .map(|(_, th)| *th)
            .collect();
        assert!(band.iter().any(|t| *t) && band.iter().any(|t| !*t));
    }

    #[test]
    fn update_state_arithmetic() {
        let d = fd(50.0, 1.0, 0.25, 200.0);
        let s = LinkState::new(vec![10.0, 5.0], false);
        let next = update_state(&s, &d, &[2.0, 1.0], &[3.0, 2.0]).unwrap();
        assert_eq!(next.vehicles, vec![9.0, 4.0]);
    }

    #[test]
    fn update_state_identity_on_zero() {
        let d = fd(50.0, 1.0, 0.25, 200.0);
        let s = LinkState::new(vec![0.0, 0.0], false);
        let next = update_state(&s, &d, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(next.vehicles, vec![0.0, 0.0]);
    }

    #[test]
    fn update_state_rejects_negative_density() {
        let d = fd(50.0, 1.0, 0.25, 200.0);
        let s = LinkState::new(vec![1.0, 0.0], false);
        let err = update_state(&s, &d, &[0.0, 0.0], &[2.0, 0.0]).unwrap_err();
        assert!(matches!(err, LinkError::NegativeDensity { commodity: 0, .. }));
    }

    #[test]
    fn destination_outflow_examples() {
        let d = fd(40.0, 1.0, 0.25, 400.0);
        let out = destination_outflow(&LinkState::new(vec![30.0], false), &d);
        assert_relative_eq!(out[0], 30.0);
        let out = destination_outflow(&LinkState::new(vec![60.0], false), &d);
        assert_relative_eq!(out[0], 40.0);

        let d = fd(20.0, 0.5, 0.25, 400.0);
        let out = destination_outflow(&LinkState::new(vec![30.0, 30.0], false), &d);
        assert_relative_eq!(out[0], 10.0, max_relative = 1e-12);
        assert_relative_eq!(out[1], 10.0, max_relative = 1e-12);
    }

    #[test]
    fn speed_branches() {
        let d = fd(40.0, 0.8, 0.25, 200.0);
        assert_eq!(speed(&LinkState::empty(1), &[0.0], &d), 0.8);
        assert_relative_eq!(speed(&LinkState::new(vec![20.0], false), &[10.0], &d), 0.5);
        let s = LinkState::new(vec![40.0], false);
        assert_relative_eq!(speed(&s, &[40.0 * 0.8], &d), 0.8, max_relative = 1e-12);
    }

    #[test]
    fn send_bounds_hold_for_sampled_states() {
        let d = fd(37.0, 0.9, 0.3, 150.0);
        for total in [0.0, 1.0, 10.0, 41.1, 90.0, 149.0] {
            let state = LinkState::new(vec![total * 0.3, total * 0.7], false);
            let s = send(&state, &d, LinkKind::Ordinary, None).unwrap();
            let sum: f64 = s.iter().sum();
            assert!(sum <= d.capacity + 1e-9);
            for (c, v) in s.iter().enumerate() {
                assert!(*v >= 0.0);
                assert!(*v <= d.free_flow_speed * state.vehicles[c] + 1e-9);
            }
        }
    }
}
