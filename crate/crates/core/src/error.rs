//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by model construction, inference and data handling.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A symbol name was looked up in a frozen table that does not contain it.
    UnknownSymbol { name: String },
    /// An operation that needs at least one observation got none.
    EmptySequence,
    /// Parameter dimensions are inconsistent or empty (M, N or Dmax of zero,
    /// wrong matrix sizes, label out of range, ...).
    InvalidDims { what: String },
    /// Strict duration policy: a run longer than Dmax cannot be covered.
    LengthExceeded { run_len: usize, dmax: usize },
    /// Every sequence in a training batch has zero probability under the
    /// current parameters; EM has nothing to re-estimate.
    DegenerateLattice,
    /// A decoder found no path with positive probability.
    ImpossibleSequence,
    /// The brute-force oracle refused an instance above its enumeration guard.
    TooLarge { limit: u64 },
    /// Volume quantization thresholds violate b2 >= b1 >= 0 or are not finite.
    InvalidThresholds,
    /// A value passed to the music-scale encoder is not on the 0.00..=0.12 grid.
    UnknownScaleValue { value: f64 },
    /// Semantic validation failed (non-stochastic rows, NaN probabilities,
    /// incompatible alphabets, mixed-kind banks, ...).
    Validation { msg: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownSymbol { name } => write!(f, "unknown symbol {name:?} in frozen table"),
            Error::EmptySequence => write!(f, "sequence has no observations"),
            Error::InvalidDims { what } => write!(f, "invalid dimensions: {what}"),
            Error::LengthExceeded { run_len, dmax } => {
                write!(f, "run of length {run_len} exceeds Dmax = {dmax}")
            }
            Error::DegenerateLattice => {
                write!(f, "all training sequences have zero probability")
            }
            Error::ImpossibleSequence => write!(f, "no path with positive probability"),
            Error::TooLarge { limit } => {
                write!(f, "instance exceeds the oracle enumeration guard ({limit} paths)")
            }
            Error::InvalidThresholds => write!(f, "volume thresholds must satisfy 0 <= b1 <= b2"),
            Error::UnknownScaleValue { value } => {
                write!(f, "value {value} is not on the 0.00..=0.12 scale grid")
            }
            Error::Validation { msg } => write!(f, "validation failed: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

impl Error {
    pub(crate) fn dims(what: impl Into<String>) -> Error {
        Error::InvalidDims { what: what.into() }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Error {
        Error::Validation { msg: msg.into() }
    }
}
