use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid direction: azimuth {azimuth} rad, elevation {elevation} rad")]
    InvalidDirection { azimuth: f64, elevation: f64 },

    #[error("array has no elements")]
    EmptyArray,

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("missing state: {0}")]
    MissingState(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),

    #[error("unknown device `{0}`")]
    UnknownDevice(String),

    #[error("duplicate device `{0}`")]
    DuplicateDevice(String),

    #[error("duplicate source-destination pair ({0}, {1})")]
    DuplicatePair(String, String),

    #[error("no link from `{0}` to `{1}`")]
    NoSuchLink(String, String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(
        context: &'static str,
        expected: impl std::fmt::Display,
        actual: impl std::fmt::Display,
    ) -> Self {
        Error::ShapeMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
