use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid LDPC parameters (n={n}, wc={wc}, wr={wr}): {reason}")]
    InvalidParams {
        n: usize,
        wc: usize,
        wr: usize,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate sample range: all values equal {0}")]
    DegenerateRange(f64),

    #[error("distribution function is {value} at sample {x}; the Anderson-Darling weight is singular there")]
    SingularWeight { x: f64, value: f64 },

    #[error("invalid simulation config: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
