use aot_core::CoreError;
use aot_coupling::CouplingError;
use thiserror::Error;

/// Errors raised by the optimal-stopping routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoppingError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    /// The cost function returned NaN, or an infinite value where a finite
    /// one is required (stopping is forced on the terminal level).
    #[error("cost function is not finite at level {level}, node {node}: {value}")]
    NonFinite { level: usize, node: usize, value: f64 },
    /// A stopping rule does not fit the tree.
    #[error("invalid stopping rule: {0}")]
    InvalidRule(String),
    /// The coupling fails the required causality condition.
    #[error("coupling is not causal as required ({what}); largest violation {violation:e}")]
    NotCausal { what: &'static str, violation: f64 },
    /// Exhaustive enumeration would exceed the configured cap.
    #[error("brute force would enumerate more than {cap} stopping rules")]
    TooManyRules { cap: usize },
    /// A parameter is outside its domain.
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}
