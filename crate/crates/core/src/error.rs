use thiserror::Error;

/// Errors raised by the vault constructions and their analyses.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("duplicate abscissa among interpolation points")]
    DuplicateAbscissa,
    #[error("expected {expected} interpolation points, got {got}")]
    WrongPointCount { expected: usize, got: usize },
    #[error("failure to capture: {selected} usable features, at least {required} required")]
    FailureToCapture { selected: usize, required: usize },
    #[error("could not place {missing} chaff minutiae within the retry budget")]
    ChaffPlacement { missing: usize },
    #[error("could not place {missing} synthetic minutiae within the retry budget")]
    Generation { missing: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("message {message} does not fit in {bits} bits")]
    MessageOutOfRange { message: u32, bits: u32 },
    #[error("expected {expected} bits, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
