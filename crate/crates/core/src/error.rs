use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("utility derivative is not positive at t = {t}")]
    NonPositiveDerivative { t: f64 },
    #[error("{0} requires a strictly concave utility")]
    NotStrictlyConcave(&'static str),
    #[error("{what} too large: {value} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        value: u128,
        limit: u128,
    },
    #[error("reference solve did not converge")]
    ReferenceNotConverged,
    #[error("utility has no certified {0} bound on its inequality aversion")]
    MissingIavBound(&'static str),
}
