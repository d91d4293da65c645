//! Golden tests for the node solvers against hand-worked instances.

mod common;

use approx::assert_abs_diff_eq;
use common::*;
use ctmnet_core::node::RoundBranch;
use ctmnet_core::{
    solve_mimo_fifo, solve_mimo_relaxed, solve_mimo_relaxed_traced, solve_miso,
    solve_simo_relaxed, tampere_priorities, NodeSpec,
};

#[test]
fn merge_three_inputs_exact() {
    let spec = merge_three_inputs();
    let sol = solve_miso(&spec).unwrap();
    assert_eq!(sol.flows[0][0][0], 400.0);
    assert_eq!(sol.flows[1][0][0], 500.0);
    assert_eq!(sol.flows[2][0][0], 100.0);

    let sol = solve_mimo_relaxed(&spec).unwrap();
    assert_eq!(sol.flows[0][0][0], 400.0);
    assert_eq!(sol.flows[1][0][0], 500.0);
    assert_eq!(sol.flows[2][0][0], 100.0);
}

/// Closed form for a two-input merge: each input gets the larger of its
/// priority share and what the other input leaves over, demand-capped.
fn merge_two_closed_form(s: [f64; 2], p: [f64; 2], r: f64) -> [f64; 2] {
    let f0 = s[0].min((p[0] / (p[0] + p[1]) * r).max(r - s[1]));
    let f1 = s[1].min((p[1] / (p[0] + p[1]) * r).max(r - s[0]));
    [f0, f1]
}

#[test]
fn merge_two_inputs_matches_closed_form() {
    let spec = NodeSpec::single_commodity(
        &[800.0, 400.0],
        &[vec![1.0], vec![1.0]],
        &[0.5, 0.5],
        &[600.0],
    );
    let expected = merge_two_closed_form([800.0, 400.0], [0.5, 0.5], 600.0);
    assert_eq!(expected, [300.0, 300.0]);
    let sol = solve_miso(&spec).unwrap();
    assert_abs_diff_eq!(sol.flows[0][0][0], expected[0], epsilon = 1e-9);
    assert_abs_diff_eq!(sol.flows[1][0][0], expected[1], epsilon = 1e-9);
}

#[test]
fn merge_closed_form_fuzz() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        use rand::Rng;
        let s = [rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)];
        let p = [rng.gen_range(0.01..2.0), rng.gen_range(0.01..2.0)];
        let r = rng.gen_range(0.0..1500.0);
        let spec =
            NodeSpec::single_commodity(&s, &[vec![1.0], vec![1.0]], &p, &[r]);
        let expected = merge_two_closed_form(s, p, r);
        let sol = solve_miso(&spec).unwrap();
        assert_abs_diff_eq!(sol.flows[0][0][0], expected[0], epsilon = 1e-7);
        assert_abs_diff_eq!(sol.flows[1][0][0], expected[1], epsilon = 1e-7);
    }
}

#[test]
fn merge_all_zero_priorities_split_evenly() {
    let spec = NodeSpec::single_commodity(
        &[100.0, 100.0],
        &[vec![1.0], vec![1.0]],
        &[0.0, 0.0],
        &[100.0],
    );
    let sol = solve_miso(&spec).unwrap();
    assert_abs_diff_eq!(sol.flows[0][0][0], 50.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.flows[1][0][0], 50.0, epsilon = 1e-12);
}

#[test]
fn intersection_4x4_full_fifo_flows() {
    // Flows as published for the capacity-priority 4x4 intersection, rounded
    // to one decimal; compare within +-0.5.
    let spec = intersection_4x4();
    let (sol, trace) = solve_mimo_relaxed_traced(&spec).unwrap();
    let expected = [
        (0, 1, 50.0),
        (0, 2, 150.0),
        (0, 3, 300.0),
        (1, 0, 68.5),
        (1, 2, 205.5),
        (1, 3, 1096.0),
        (2, 0, 100.0),
        (2, 1, 100.0),
        (2, 3, 600.0),
        (3, 0, 80.6),
        (3, 1, 644.5),
        (3, 2, 644.5),
    ];
    for (i, j, value) in expected {
        assert_abs_diff_eq!(sol.movement_total(i, j), value, epsilon = 0.5);
    }
    // Intermediate supply-to-priority factors (1-based output 7 is index 2,
    // output 8 is index 3).
    assert_abs_diff_eq!(trace.factor(0, 2), 0.649, epsilon = 1e-3);
    assert_abs_diff_eq!(trace.factor(1, 2), 0.685, epsilon = 1e-3);
    assert_abs_diff_eq!(trace.factor(2, 3), 0.805, epsilon = 1e-3);

    // The dedicated full-FIFO solver agrees to rounding error.
    let fifo = solve_mimo_fifo(&spec).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert_abs_diff_eq!(
                fifo.movement_total(i, j),
                sol.movement_total(i, j),
                epsilon = 1e-9
            );
        }
    }
}

#[test]
fn intersection_4x4_relaxed_flows() {
    let spec = intersection_4x4_relaxed();
    let (sol, trace) = solve_mimo_relaxed_traced(&spec).unwrap();

    // Exact values of the algorithm carried through at full precision.
    let expected = [
        (0, 1, 50.0),
        (0, 2, 150.0),
        (0, 3, 300.0),
        (1, 0, 89.9082),
        (1, 2, 205.45024),
        (1, 3, 1211.84315),
        (2, 0, 81.35947),
        (2, 1, 81.35947),
        (2, 3, 488.15680),
        (3, 0, 100.0),
        (3, 1, 722.27488),
        (3, 2, 644.54976),
    ];
    for (i, j, value) in expected {
        assert_abs_diff_eq!(sol.movement_total(i, j), value, epsilon = 1e-4);
    }

    // Working demands after the first supply round: movement (2, 8) decays
    // to ~1348 and (4, 6) to 722.25.
    assert_abs_diff_eq!(trace.effective_demand(2, 1, 3), 1348.0, epsilon = 0.5);
    assert_abs_diff_eq!(trace.effective_demand(2, 3, 1), 722.25, epsilon = 0.5);

    // Output 7 (index 2) is exhausted; outputs keep their supply bound.
    assert_abs_diff_eq!(sol.output_totals[2], 1000.0, epsilon = 1e-9);
    assert_abs_diff_eq!(sol.output_totals[3], 2000.0, epsilon = 1e-9);

    // Four assignment rounds for this instance, within the M + N - 2 bound
    // counted by final round index.
    assert!(trace.round_count() >= 1);
    assert!(trace.rounds.last().unwrap().index <= 4 + 4 - 2);
    assert!(matches!(
        trace.rounds[0].branch,
        RoundBranch::DemandMet { .. }
    ));
}

#[test]
fn diverge_three_outputs_exact() {
    let spec = diverge_three_outputs();
    let sol = solve_simo_relaxed(&spec).unwrap();
    assert_eq!(sol.flows[0][0][0], 100.0);
    assert_eq!(sol.flows[0][1][0], 400.0);
    assert_eq!(sol.flows[0][2][0], 270.0);

    let general = solve_mimo_relaxed(&spec).unwrap();
    for j in 0..3 {
        assert_abs_diff_eq!(
            general.flows[0][j][0],
            sol.flows[0][j][0],
            epsilon = 1e-9
        );
    }
}

#[test]
fn diverge_unrestricted_with_ample_supply() {
    let mut spec = NodeSpec::single_commodity(
        &[100.0],
        &[vec![0.5, 0.5]],
        &[1.0],
        &[1000.0, 1000.0],
    );
    for j in 0..2 {
        for jp in 0..2 {
            if j != jp {
                spec.restriction[0][j][jp] = 0.0;
            }
        }
    }
    let sol = solve_simo_relaxed(&spec).unwrap();
    assert_eq!(sol.flows[0][0][0], 50.0);
    assert_eq!(sol.flows[0][1][0], 50.0);
}

#[test]
fn diverge_full_fifo_scales_both_movements() {
    let spec = NodeSpec::single_commodity(
        &[100.0],
        &[vec![0.5, 0.5]],
        &[1.0],
        &[25.0, 1000.0],
    );
    let sol = solve_simo_relaxed(&spec).unwrap();
    assert_eq!(sol.flows[0][0][0], 25.0);
    assert_eq!(sol.flows[0][1][0], 25.0);
}

#[test]
fn capacity_proportional_priorities() {
    assert_eq!(
        tampere_priorities(&[1000.0, 2000.0, 1000.0, 2000.0]),
        vec![1000.0, 2000.0, 1000.0, 2000.0]
    );
    assert_eq!(tampere_priorities(&[0.0]), vec![0.0]);
}

#[test]
fn square_2x2_throughput() {
    let sol = solve_mimo_relaxed(&square_2x2()).unwrap();
    assert_abs_diff_eq!(sol.flows[0][0][0], 600.0, epsilon = 1e-9);
    assert_abs_diff_eq!(sol.flows[0][1][0], 1000.0 / 15.0, epsilon = 1e-9);
    assert_abs_diff_eq!(sol.flows[1][0][0], 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.flows[1][1][0], 14000.0 / 15.0, epsilon = 1e-9);
    assert_abs_diff_eq!(sol.total(), 1600.0, epsilon = 1e-9);
}

#[test]
fn invalid_specs_rejected() {
    let mut spec = merge_three_inputs();
    spec.priorities[0] = -1.0;
    assert!(solve_mimo_relaxed(&spec).is_err());

    let mut spec = merge_three_inputs();
    spec.split[0][0][0] = 0.7; // sums to 0.7 with positive demand
    assert!(solve_mimo_relaxed(&spec).is_err());

    let mut spec = diverge_three_outputs();
    spec.restriction[0][1][1] = 0.5; // diagonal must stay 1
    assert!(solve_mimo_relaxed(&spec).is_err());

    assert!(solve_miso(&square_2x2()).is_err());
    assert!(solve_simo_relaxed(&square_2x2()).is_err());
}

#[test]
fn multi_commodity_proportionality() {
    // Two commodities on one congested movement keep their demand shares.
    let spec = NodeSpec {
        commodities: 2,
        demand: vec![vec![300.0, 100.0], vec![200.0, 200.0]],
        split: vec![
            vec![vec![1.0, 1.0]],
            vec![vec![1.0, 1.0]],
        ],
        priorities: vec![1.0, 1.0],
        supply: vec![300.0],
        restriction: NodeSpec::full_fifo_restriction(2, 1),
    };
    let sol = solve_mimo_relaxed(&spec).unwrap();
    let f = &sol.flows;
    assert_abs_diff_eq!(f[0][0][0] / f[0][0][1], 3.0, epsilon = 1e-9);
    assert_abs_diff_eq!(f[1][0][0] / f[1][0][1], 1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(sol.total(), 300.0, epsilon = 1e-9);
}
