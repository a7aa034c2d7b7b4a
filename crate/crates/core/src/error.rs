use thiserror::Error;

/// Errors raised by the workbench. Violations of the properties being
/// checked are never errors; they are reported through [`crate::report`].
#[derive(Debug, Error)]
pub enum Error {
    /// Dimension mismatch, incompatible arguments, malformed input.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown functor name `{0}`")]
    UnknownFunctor(String),

    #[error("unknown monoid `{0}`")]
    UnknownMonoid(String),

    /// A carrier would exceed the configured resource bound.
    #[error("resource bound exceeded: |{what}| = {size} > {limit}")]
    Bound {
        what: String,
        size: String,
        limit: usize,
    },

    #[error("timeout after {0} s")]
    Timeout(u64),

    #[error("invalid monoid: {0}")]
    InvalidMonoid(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn bound(what: impl Into<String>, size: impl ToString, limit: usize) -> Self {
        Error::Bound {
            what: what.into(),
            size: size.to_string(),
            limit,
        }
    }

    /// Exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Bound { .. } | Error::Timeout(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
