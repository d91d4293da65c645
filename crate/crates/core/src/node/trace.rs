//! Iteration trace of the general node solver, used by verification code to
//! inspect per-round factors and working quantities.

/// How a solver round assigned flows.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundBranch {
    /// The listed inputs could send all their remaining demand.
    DemandMet { inputs: Vec<usize> },
    /// Supply of the bottleneck output was divided by priority.
    SupplySplit,
}

/// Snapshot of one round of the relaxed MIMO algorithm, taken before the
/// round's assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveRound {
    pub index: usize,
    /// Outputs still being processed, ascending.
    pub active_outputs: Vec<usize>,
    /// Unprocessed inputs per output (full length N, empty when inactive).
    pub unprocessed: Vec<Vec<usize>>,
    /// Remaining supply per output at the start of the round.
    pub supply_left: Vec<f64>,
    /// Working (effective) total oriented demand per movement, M x N.
    pub effective_demand: Vec<Vec<f64>>,
    /// Input priorities after the zero-priority substitution, if any.
    pub priorities: Vec<f64>,
    /// Oriented priorities per movement, M x N (0 where not defined).
    pub oriented_priorities: Vec<Vec<f64>>,
    /// Supply-to-priority factors per output; infinity where undefined.
    pub factors: Vec<f64>,
    /// The most restricted output of this round.
    pub bottleneck: usize,
    pub branch: RoundBranch,
    /// Movements whose flows were written this round.
    pub assigned: Vec<(usize, usize)>,
}

/// Full iteration trace of one solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub rounds: Vec<SolveRound>,
}

impl SolveTrace {
    /// Number of assignment rounds executed.
    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }

    /// Factor `a_j(k)`; panics when the round or output was inactive.
    pub fn factor(&self, round: usize, output: usize) -> f64 {
        self.rounds[round].factors[output]
    }

    /// Working total oriented demand of movement `(i, j)` at round `k`.
    pub fn effective_demand(&self, round: usize, input: usize, output: usize) -> f64 {
        self.rounds[round].effective_demand[input][output]
    }
}
