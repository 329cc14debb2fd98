use thiserror::Error;

/// Errors raised by ensemble construction, density evolution and threshold search.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("message dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("design rate is not positive for L = {l} (w = {w}, {cols} columns per block)")]
    NonpositiveRate { l: usize, w: usize, cols: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("window size {window} is smaller than the minimum {min}")]
    WindowTooSmall { window: usize, min: usize },

    #[error("degenerate bisection bracket: {0}")]
    DegenerateBracket(String),

    #[error("no plateau found up to {param} = {cap}")]
    NoPlateau { param: &'static str, cap: usize },

    #[error("decoding failed at epsilon = {epsilon}")]
    DecodeFailure { epsilon: f64 },

    #[error("cannot parse ensemble `{input}`: {reason}")]
    Grammar { input: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
