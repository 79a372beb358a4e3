use aot_coupling::PathMetric;

use crate::error::SolverError;
use crate::lp::{LpEngine, LpOptions};

/// Penalty charged for the relaxation parameter `ε` in the adapted
/// distances. Must be nondecreasing with `penalty(0) = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub enum Penalty {
    /// `ε ↦ ε`.
    #[default]
    Linear,
    /// `ε ↦ √ε` (suited to martingales).
    Sqrt,
    /// Any user-supplied nondecreasing function.
    Custom(fn(f64) -> f64),
}

impl Penalty {
    /// Evaluates the penalty.
    pub fn apply(&self, eps: f64) -> f64 {
        match self {
            Penalty::Linear => eps,
            Penalty::Sqrt => eps.sqrt(),
            Penalty::Custom(f) => f(eps),
        }
    }
}

/// Options shared by all distance computations.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Order `p ≥ 1`.
    pub p: f64,
    /// Path metric in the transport cost.
    pub metric: PathMetric,
    /// Penalty for the relaxation parameter.
    pub penalty: Penalty,
    /// Largest `|leaves(X)|·|leaves(Y)|` accepted by the global LPs.
    pub max_lp_pairs: usize,
    /// Largest number of node pairs (summed over levels) accepted by the
    /// nested dynamic programme.
    pub max_dp_pairs: usize,
    /// Whether reports carry the optimal coupling.
    pub keep_witness: bool,
    /// Engine for the global coupling LPs (transport subproblems always use
    /// the dense simplex).
    pub engine: LpEngine,
    /// Simplex settings.
    pub lp: LpOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            p: 1.0,
            metric: PathMetric::Sup,
            penalty: Penalty::Linear,
            max_lp_pairs: 40_000,
            max_dp_pairs: 4_000_000,
            keep_witness: true,
            engine: LpEngine::Sparse,
            lp: LpOptions::default(),
        }
    }
}

impl SolverOptions {
    /// Default options with order `p`.
    pub fn order(p: f64) -> Self {
        SolverOptions { p, ..Default::default() }
    }

    pub(crate) fn check(&self) -> Result<(), SolverError> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(SolverError::BadOrder(self.p));
        }
        Ok(())
    }
}
