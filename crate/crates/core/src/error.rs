use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A malformed input record.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Well-formed records that do not form a valid chain.
    #[error("structural error: {0}")]
    Structural(String),

    /// Input data is missing something the operation needs.
    #[error("data error: {0}")]
    Data(String),

    /// An operation's precondition does not hold for its input.
    #[error("contract violated: {0}")]
    Contract(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for errors caused by the input data rather than by the caller's
    /// parameters.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Structural(_) | Error::Data(_)
        )
    }
}

pub(crate) fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must lie in [0, 1], got {value}")))
    }
}
