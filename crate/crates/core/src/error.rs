use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric field failed validation at construction time.
    #[error("{field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("position {position} out of range for a list of {len}")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    /// Exhaustive searches refuse inputs above their size guard.
    #[error("{what}: size {size} exceeds the limit of {max}")]
    TooLarge {
        what: &'static str,
        size: usize,
        max: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
