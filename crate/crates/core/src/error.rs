use thiserror::Error;

/// Errors raised by the geometry, transport and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid point for {space}: {reason}")]
    InvalidPoint { space: &'static str, reason: String },

    #[error("geodesic is not unique (antipodal points)")]
    NonUniqueGeodesic,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configurations live on different spaces")]
    SpaceMismatch,

    #[error("cardinalities differ ({0} vs {1}), distance is infinite")]
    InfiniteDistance(usize, usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
