use thiserror::Error;

/// Errors surfaced to users of the library.
///
/// `DivisionByZero` and `Domain` can also travel inside streams as sticky
/// fault elements, because most of them are only discoverable lazily.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum CfError {
    #[error("division by zero")]
    DivisionByZero,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("division by zero (result is not a finite real)")]
    NotFinite,

    #[error("cannot certify the result to the requested precision within {cap} iterations")]
    IterationCap { cap: usize },

    #[error("invalid continued-fraction term: {0}")]
    InvalidTerm(String),

    #[error("degenerate matrix (zero determinant)")]
    DegenerateMatrix,
}
