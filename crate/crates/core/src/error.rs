use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed annotation at line {line}: {reason}")]
    MalformedAnnotation { line: usize, reason: String },

    #[error("annotation {ann_id} offset {end} exceeds text length {len}")]
    OffsetOutOfRange { ann_id: String, end: usize, len: usize },

    #[error("annotation {ann_id}: surface {surface:?} does not match text slice {slice:?}")]
    SurfaceMismatch {
        ann_id: String,
        surface: String,
        slice: String,
    },

    #[error("entities {first} and {second} overlap in document {doc_id}")]
    OverlappingEntities {
        doc_id: String,
        first: String,
        second: String,
    },

    #[error("malformed CoNLL at line {line}: {reason}")]
    MalformedConll { line: usize, reason: String },

    #[error("malformed offsets sidecar at line {line}: {reason}")]
    MalformedOffsets { line: usize, reason: String },

    #[error("insufficient training data: {0}")]
    InsufficientData(String),

    #[error("vocabulary is empty")]
    EmptyVocab,

    #[error("malformed embedding file at line {line}: {reason}")]
    MalformedEmbeddingFile { line: usize, reason: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("embedder {component} returned {got} components, expected {expected}")]
    DimensionMismatch {
        component: String,
        expected: usize,
        got: usize,
    },

    #[error("tag index {index} out of range for {num_tags} tags")]
    InvalidTagIndex { index: usize, num_tags: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("search space is empty")]
    EmptySpace,

    #[error("model bundle is missing component {0}")]
    ModelMissingComponent(String),

    #[error("duplicate mention {0}")]
    DuplicateMention(String),

    #[error("malformed model container: {0}")]
    MalformedContainer(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable identifier used in machine-readable CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedAnnotation { .. } => "MalformedAnnotation",
            Error::OffsetOutOfRange { .. } => "OffsetOutOfRange",
            Error::SurfaceMismatch { .. } => "SurfaceMismatch",
            Error::OverlappingEntities { .. } => "OverlappingEntities",
            Error::MalformedConll { .. } => "MalformedConll",
            Error::MalformedOffsets { .. } => "MalformedOffsets",
            Error::InsufficientData(_) => "InsufficientData",
            Error::EmptyVocab => "EmptyVocab",
            Error::MalformedEmbeddingFile { .. } => "MalformedEmbeddingFile",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidTagIndex { .. } => "InvalidTagIndex",
            Error::EmptyDataset => "EmptyDataset",
            Error::EmptySpace => "EmptySpace",
            Error::ModelMissingComponent(_) => "ModelMissingComponent",
            Error::DuplicateMention(_) => "DuplicateMention",
            Error::MalformedContainer(_) => "MalformedContainer",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Io { .. } => "Io",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_string(path: &std::path::Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}
