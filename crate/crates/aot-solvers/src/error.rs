use aot_core::CoreError;
use aot_coupling::CouplingError;
use thiserror::Error;

use crate::lp::LpError;

/// Errors raised by the distance solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("problem too large: {pairs} leaf pairs exceed the cap of {cap}")]
    TooLarge { pairs: usize, cap: usize },
    #[error("LP reported {0}, which is impossible for a coupling problem")]
    Unexpected(String),
    #[error("invalid order p = {0}; need p ≥ 1")]
    BadOrder(f64),
}
