//! Shared instances for the solver test suites: the worked merge, diverge
//! and 4x4 intersection examples plus randomized instance generators.

#![allow(dead_code)]

use ctmnet_core::NodeSpec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Three-input merge: S = (400, 500, 200), p = (1/3, 2/3, 0), R = 1000.
pub fn merge_three_inputs() -> NodeSpec {
    NodeSpec::single_commodity(
        &[400.0, 500.0, 200.0],
        &[vec![1.0], vec![1.0], vec![1.0]],
        &[1.0 / 3.0, 2.0 / 3.0, 0.0],
        &[1000.0],
    )
}

/// The 4x4 intersection with capacity-proportional priorities.
pub fn intersection_4x4() -> NodeSpec {
    NodeSpec::single_commodity(
        &[500.0, 2000.0, 800.0, 1700.0],
        &[
            vec![0.0, 0.1, 0.3, 0.6],
            vec![0.05, 0.0, 0.15, 0.8],
            vec![0.125, 0.125, 0.0, 0.75],
            vec![1.0 / 17.0, 8.0 / 17.0, 8.0 / 17.0, 0.0],
        ],
        &[1000.0, 2000.0, 1000.0, 2000.0],
        &[1000.0, 2000.0, 1000.0, 2000.0],
    )
}

/// The 4x4 intersection with the two-lane inputs' FIFO partially relaxed.
///
/// Outputs are indexed 0..4 here; in 1-based link labels 5..8, the relaxed
/// coefficients are eta_76 = eta_56 = 0.5 and eta_75 = eta_57 = 0 for input
/// 4, eta_58 = eta_78 = 0.5 and eta_75 = eta_57 = 0 for input 2.
pub fn intersection_4x4_relaxed() -> NodeSpec {
    let mut spec = intersection_4x4();
    // restriction[i][restrictor][affected], 0-based: inputs 2 -> 1, 4 -> 3;
    // outputs 5,6,7,8 -> 0,1,2,3.
    spec.restriction[3][2][1] = 0.5; // eta_76^4
    spec.restriction[3][0][1] = 0.5; // eta_56^4
    spec.restriction[3][2][0] = 0.0; // eta_75^4
    spec.restriction[3][0][2] = 0.0; // eta_57^4
    spec.restriction[1][0][3] = 0.5; // eta_58^2
    spec.restriction[1][2][3] = 0.5; // eta_78^2
    spec.restriction[1][2][0] = 0.0; // eta_75^2
    spec.restriction[1][0][2] = 0.0; // eta_57^2
    spec
}

/// Single-input diverge with asymmetric mutual restrictions.
pub fn diverge_three_outputs() -> NodeSpec {
    let mut spec = NodeSpec::single_commodity(
        &[1000.0],
        &[vec![0.2, 0.5, 0.3]],
        &[1.0],
        &[100.0, 400.0, 300.0],
    );
    spec.restriction[0][0][1] = 0.2; // eta_12
    spec.restriction[0][1][0] = 1.0; // eta_21
    spec.restriction[0][2][0] = 0.0; // eta_31
    spec.restriction[0][0][2] = 0.0; // eta_13
    spec.restriction[0][1][2] = 0.5; // eta_23
    spec.restriction[0][2][1] = 0.0; // eta_32
    spec
}

/// The 2x2 instance on which demand-proportional supply allocation loses
/// throughput: S = (1000, 1000), R = (600, 1000), input 1 splitting 9:1.
pub fn square_2x2() -> NodeSpec {
    NodeSpec::single_commodity(
        &[1000.0, 1000.0],
        &[vec![0.9, 0.1], vec![0.0, 1.0]],
        &[0.5, 0.5],
        &[600.0, 1000.0],
    )
}

/// Uniformly random instance with the given dimensions.
///
/// Demands in [0, 2000] with occasional zero commodities, stochastic split
/// rows with random support, mixed zero priorities, supplies scaled to the
/// total demand, and restriction coefficients drawn from `eta_choices`.
pub fn random_spec(
    rng: &mut ChaCha8Rng,
    m: usize,
    n: usize,
    c: usize,
    eta_choices: &[f64],
) -> NodeSpec {
    let mut demand = vec![vec![0.0; c]; m];
    for row in demand.iter_mut() {
        for d in row.iter_mut() {
            *d = if rng.gen_bool(0.15) {
                0.0
            } else {
                rng.gen_range(0.0..2000.0)
            };
        }
    }
    let mut split = vec![vec![vec![0.0; c]; n]; m];
    for i in 0..m {
        for cc in 0..c {
            // Random support of size >= 1, then normalize.
            let mut weights = vec![0.0; n];
            let mut total = 0.0;
            while total <= 0.0 {
                for w in weights.iter_mut() {
                    *w = if rng.gen_bool(0.3) {
                        0.0
                    } else {
                        rng.gen_range(0.05..1.0)
                    };
                }
                total = weights.iter().sum();
            }
            for j in 0..n {
                split[i][j][cc] = weights[j] / total;
            }
        }
    }
    let all_zero = rng.gen_bool(0.05);
    let priorities = (0..m)
        .map(|_| {
            if all_zero || rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(0.1..3.0)
            }
        })
        .collect::<Vec<f64>>();
    let total_demand: f64 = demand.iter().flatten().sum();
    let supply = (0..n)
        .map(|_| rng.gen_range(0.0..1.2) * (total_demand / n as f64).max(10.0))
        .collect::<Vec<f64>>();
    let mut restriction = NodeSpec::full_fifo_restriction(m, n);
    for row in restriction.iter_mut() {
        for j in 0..n {
            for jp in 0..n {
                if j != jp {
                    row[j][jp] = eta_choices[rng.gen_range(0..eta_choices.len())];
                }
            }
        }
    }
    NodeSpec {
        commodities: c,
        demand,
        split,
        priorities,
        supply,
        restriction,
    }
}
