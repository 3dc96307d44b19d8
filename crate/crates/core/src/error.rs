use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error(
        "degenerate input: marginal rank pattern ({0}, {1}, {2}) is impossible for a pure state"
    )]
    DegenerateInput(u8, u8, u8),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("insufficient classes: ANOVA needs at least 2 classes, found {0}")]
    InsufficientClasses(usize),

    #[error("insufficient samples: class {class} has {count} sample(s), need at least 2")]
    InsufficientSamples { class: usize, count: usize },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown model {name:?}; catalog: {}", catalog.join(", "))]
    UnknownModel { name: String, catalog: Vec<String> },

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("unsupported format version {found} (reader supports {supported})")]
    UnsupportedVersion { found: u64, supported: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
