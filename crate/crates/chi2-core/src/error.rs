use thiserror::Error;

/// Library-wide error type. `Invalid` marks structurally impossible inputs,
/// `OutOfDomain` marks inputs outside a stated validity range of the quantity
/// being computed (callers that merely want a flag should use the `in_domain`
/// fields on results instead).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(&'static str),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("out of domain: {0}")]
    OutOfDomain(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
