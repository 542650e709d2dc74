use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("matrix is not unitary (eigenvalue modulus off by {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("eigendecomposition failed to converge")]
    Eigendecomposition,

    #[error("spectrum is not sorted ascending at index {index}")]
    UnsortedSpectrum { index: usize },

    #[error("need at least {needed} levels, got {found}")]
    TooFewLevels { needed: usize, found: usize },

    #[error("value {value} outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("histograms have mismatched bin edges")]
    MismatchedBins,

    #[error("invalid spin value {0}; expected +1 or -1")]
    InvalidSpin(i32),

    #[error("chain of length {0} is too large for exact enumeration")]
    EnumerationTooLarge(usize),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite cost at step {step}, candidate {candidate}")]
    NonFiniteCost { step: usize, candidate: usize },

    #[error("window [{start}, {end}) does not fit in a schedule of {len} layers")]
    InvalidWindow { start: usize, end: usize, len: usize },
}
