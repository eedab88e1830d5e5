use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Validation and numerical failures raised by the core algorithms.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vocabulary violates one of its invariants.
    InvalidVocabulary(String),
    /// Vocabulary labels that have no word vector.
    MissingTokens(Vec<String>),
    /// Concept id outside the vocabulary or embedding table.
    UnknownConcept(u32),
    /// Two inputs that must agree in length or shape do not.
    DimensionMismatch { expected: usize, actual: usize },
    /// A parameter is outside its allowed range.
    InvalidParameter(String),
    /// Perplexity bisection did not reach the target entropy.
    BisectionFailed { row: usize },
    /// The t-SNE optimizer produced a non-finite value.
    NonFinite { iteration: usize },
    /// A value to be quantized lies outside `[-1, 1]`.
    OutOfRange(f64),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidVocabulary(msg) => write!(f, "invalid vocabulary: {msg}"),
            Error::MissingTokens(tokens) => {
                write!(f, "no word vector for token(s): ")?;
                for (i, t) in tokens.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(t)?;
                }
                Ok(())
            }
            Error::UnknownConcept(id) => write!(f, "unknown concept id {id}"),
            Error::DimensionMismatch { expected, actual } => {
                write!(f, "dimension mismatch: expected {expected}, got {actual}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::BisectionFailed { row } => {
                write!(f, "perplexity bisection failed to bracket the target entropy for row {row}")
            }
            Error::NonFinite { iteration } => {
                write!(f, "t-SNE produced a non-finite value at iteration {iteration}")
            }
            Error::OutOfRange(v) => write!(f, "value {v} outside [-1, 1]"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
