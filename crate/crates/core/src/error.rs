use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An operation was called outside its domain (bad coefficient, non-klt pair, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// A domain error raised inside a named pipeline stage.
    #[error("stage `{stage}`: {message}")]
    Stage { stage: String, message: String },
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("unsupported schema_version {0:?}")]
    Version(String),
    #[error("verification mismatch in stage `{stage}`: {message}")]
    Verification { stage: String, message: String },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn verification(stage: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Verification {
            stage: stage.into(),
            message: message.into(),
        }
    }

    /// Re-tag a domain error with the pipeline stage it happened in.
    pub fn in_stage(self, stage: &str) -> Self {
        match self {
            Error::Domain(message) | Error::Resource(message) => Error::Stage {
                stage: stage.to_string(),
                message,
            },
            other => other,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Stage { .. } | Error::Resource(_) => 1,
            Error::Verification { .. } => 2,
            Error::Parse { .. } | Error::Version(_) => 3,
        }
    }
}
