use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two sampled objects do not live on the same nodes.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Grid construction failed one of the grid invariants.
    #[error("invalid grid: {0}")]
    Grid(String),

    /// The problem data is inconsistent (orders, boundary data, channels).
    #[error("invalid problem: {0}")]
    Problem(String),

    /// A trajectory or variation violates the admissibility conditions.
    #[error("inadmissible input: {0}")]
    Admissibility(String),

    /// Writing output failed.
    #[error("output error: {0}")]
    Output(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),
}
