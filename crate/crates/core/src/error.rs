use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("no embedding for text with key {key}")]
    MissingEmbedding { key: String },

    #[error("embedding provider rejected empty text")]
    EmptyText,

    #[error("non-finite embedding value from provider {provider}")]
    NonFiniteEmbedding { provider: String },

    #[error("document {doc_id} has {sections} section(s); at least 2 are required")]
    InsufficientSections { doc_id: String, sections: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is not finite")]
    Divergence { epoch: usize, batch: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sample too small: need at least {min} values, got {got}")]
    SampleTooSmall { min: usize, got: usize },

    #[error("invalid document: {0}")]
    InvalidDocument(String),
}
