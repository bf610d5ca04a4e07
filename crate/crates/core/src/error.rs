use std::path::PathBuf;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value violates its documented invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Two inputs disagree in shape, or a shape does not divide evenly.
    #[error("shape error: {0}")]
    Shape(String),

    /// Input data is missing, empty or inconsistent.
    #[error("data error: {0}")]
    Data(String),

    /// A serialized artifact failed an integrity check.
    #[error("corrupt data: {0}")]
    Corruption(String),

    /// A file could not be parsed; `offset` is the byte position of the failure.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
