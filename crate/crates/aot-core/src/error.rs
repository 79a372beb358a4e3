use thiserror::Error;

/// Errors raised by tree construction and the discretisation operators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    /// The grid violates its invariants.
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    /// The tree violates its invariants; every violation is listed.
    #[error("invalid tree: {}", .0.join("; "))]
    InvalidTree(Vec<String>),
    /// A target grid is not contained in the source grid.
    #[error("target grid is not a subset of the source grid (time {0} missing)")]
    NotSubset(f64),
    /// A path has the wrong number of entries for its grid.
    #[error("path has {got} values but the grid needs {expected}")]
    PathLength { expected: usize, got: usize },
    /// JSON (de)serialisation failure.
    #[error("json: {0}")]
    Json(String),
}
