use aot_core::CoreError;
use thiserror::Error;

/// Errors raised by the generators and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error(transparent)]
    Core(#[from] CoreError),
    /// The requested tree would exceed the leaf cap.
    #[error("tree would have {leaves} leaves, above the cap of {cap}")]
    TooLarge { leaves: f64, cap: usize },
    /// A parameter is outside its domain.
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    /// A coefficient expression failed to parse or evaluate.
    #[error("expression error: {0}")]
    Expression(String),
}
