use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("XML parse error at byte {offset}: {message}")]
    Xml { offset: u64, message: String },

    #[error("document {0} has neither an abstract nor body text")]
    EmptyDocument(String),

    #[error("{path}:{line}: {message}")]
    Validation { path: PathBuf, line: usize, message: String },

    #[error("{path}: bad format: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: corrupt file: {message}")]
    Corruption { path: PathBuf, message: String },

    #[error("no question ids in common: {answers} answer ids, {references} reference ids")]
    NoCommonIds { answers: usize, references: usize },

    #[error("invalid provider spec {0:?}: expected test:<dim>:<seed> or cache:<path>")]
    ProviderSpec(String),

    #[error(transparent)]
    Core(#[from] segrag_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code: 3 for data problems, 4 for numeric divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(segrag_core::Error::Divergence { .. }) => 4,
            _ => 3,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Xml { .. } => "xml",
            Error::EmptyDocument(_) => "empty_document",
            Error::Validation { .. } => "validation",
            Error::Format { .. } => "format",
            Error::Corruption { .. } => "corruption",
            Error::NoCommonIds { .. } => "no_common_ids",
            Error::ProviderSpec(_) => "provider_spec",
            Error::Core(segrag_core::Error::Divergence { .. }) => "divergence",
            Error::Core(_) => "data",
        }
    }
}
