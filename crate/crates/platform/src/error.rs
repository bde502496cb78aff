use thiserror::Error;

pub type Result<T, E = PlatformError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error(transparent)]
    Core(#[from] sit_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A file that parsed but does not match its documented layout.
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },

    #[error("unknown session {0}")]
    UnknownSession(String),
}

impl PlatformError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        PlatformError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn format(path: impl Into<String>, msg: impl Into<String>) -> Self {
        PlatformError::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
