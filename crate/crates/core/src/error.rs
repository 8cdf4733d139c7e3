use thiserror::Error;

/// Errors produced by the scrambling toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration violates the no-adjacent-occupation constraint: {0}")]
    ConstraintViolation(String),
    #[error("invalid sector: L = {sites}, N = {particles}")]
    InvalidSector { sites: usize, particles: usize },
    #[error("particle number mismatch: expected {expected}, found {found}")]
    SectorMismatch { expected: usize, found: usize },
    #[error("invalid bitstring {0:?}: only '0' and '1' are allowed")]
    InvalidBitstring(String),
    #[error("amplitude magnitude below 1e-300, configuration cannot be used as a reference")]
    DegenerateAmplitude,
    #[error("all candidate weights underflowed at sampling step {step}")]
    NumericalUnderflow { step: usize },
    #[error("sample {index}: {source}")]
    Sample { index: usize, source: Box<Error> },
    #[error("sector of size {size} exceeds the cap of {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("sector dimension {dim} exceeds the dense cap of {cap}")]
    SectorTooLarge { dim: usize, cap: usize },
    #[error("empty sample batch")]
    EmptyBatch,
    #[error("fit failed: {0}")]
    FitFailure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("too many degenerate reference configurations: {skipped} of {total}")]
    TooManyDegenerate { skipped: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
