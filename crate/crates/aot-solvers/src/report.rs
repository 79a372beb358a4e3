use aot_coupling::{Coupling, Direction};
use serde::Serialize;

/// Which distance a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    /// Plain Wasserstein distance of the laws.
    W,
    /// Causal distance (one direction).
    Cw,
    /// Symmetrised causal distance.
    Scw,
    /// Symmetrised causal distance with `ε = 0`.
    ScwStrict,
    /// Adapted Wasserstein distance (outer minimisation over `ε`).
    Aw,
    /// Strict adapted (nested) distance, `ε = 0`.
    AwStrict,
    /// Inner value of the `ε`-bicausal or `ε`-causal problem at a fixed `ε`
    /// (no penalty).
    EpsLp,
    /// Hellwig's information metric.
    Hellwig,
}

/// Solver statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Number of LPs solved (including transport subproblems).
    pub lp_solves: usize,
    /// Total simplex pivots.
    pub lp_iterations: usize,
    /// Causality rows in the largest LP.
    pub constraints: usize,
    /// Variables in the largest LP.
    pub variables: usize,
    /// Largest full-constraint violation of the witness.
    pub witness_violation: f64,
    /// Wall time in milliseconds.
    pub runtime_ms: f64,
}

impl Diagnostics {
    pub(crate) fn absorb(&mut self, other: &Diagnostics) {
        self.lp_solves += other.lp_solves;
        self.lp_iterations += other.lp_iterations;
        self.constraints = self.constraints.max(other.constraints);
        self.variables = self.variables.max(other.variables);
        self.witness_violation = self.witness_violation.max(other.witness_violation);
    }
}

/// Result of a distance computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    pub kind: DistanceKind,
    pub p: f64,
    /// The distance (including the `ε` penalty where applicable).
    pub value: f64,
    /// The relaxation `ε` at which the optimum is attained.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// For one-directional distances: the causality direction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    /// Inner values `(ε, E_π[d^p]^{1/p})` visited by the outer minimisation.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub eps_scan: Vec<(f64, f64)>,
    /// Optimal coupling (rows: left leaves, columns: right leaves).
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_coupling")]
    pub coupling: Option<Coupling>,
    pub diagnostics: Diagnostics,
}

fn ser_coupling<S: serde::Serializer>(c: &Option<Coupling>, s: S) -> Result<S::Ok, S::Error> {
    c.as_ref().map(Coupling::to_rows).serialize(s)
}

impl DistanceReport {
    pub(crate) fn new(kind: DistanceKind, p: f64, value: f64) -> Self {
        DistanceReport {
            kind,
            p,
            value,
            epsilon: None,
            direction: None,
            eps_scan: Vec::new(),
            coupling: None,
            diagnostics: Diagnostics::default(),
        }
    }
}
