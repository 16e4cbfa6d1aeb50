use lata_core::ces::CesError;
use lata_core::edit::EditError;
use lata_core::model::{Role, Violation};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no project matches `{0}`")]
    NotFound(String),
    #[error("several projects are named `{0}`; use the project id")]
    AmbiguousName(String),
    #[error("change rejected: {}", summarize(.0))]
    Rejected(Vec<Violation>),
    #[error("change rejected: {0}")]
    Edit(#[from] EditError),
    #[error("expected revision {expected}, project is at {actual}")]
    StaleRevision { expected: u64, actual: u64 },
    #[error("nothing to undo")]
    EmptyUndo,
    #[error("nothing to redo")]
    EmptyRedo,
    #[error("the {0} document is already imported; pass replace to overwrite it")]
    DocumentExists(Role),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Bundle(#[from] CesError),
    #[error("storage error: {0}")]
    Storage(#[from] rusqlite::Error),
    #[error("corrupt stored record: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn summarize(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

impl StoreError {
    /// Stable token for the error class.
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::NotFound(_) => "not-found",
            StoreError::AmbiguousName(_) => "ambiguous-name",
            StoreError::Rejected(v) => v.first().map_or("validation-rejection", |v| v.rule.code()),
            StoreError::Edit(e) => match e {
                EditError::UnknownLink(_) => "unknown-link",
                EditError::DuplicateLink(_) => "duplicate-link-id",
                EditError::UnknownTechnique(_) => "unknown-technique",
                EditError::UnknownParagraph { .. } => "unknown-paragraph",
                EditError::UnknownTemplate(_) => "unknown-template",
                EditError::BadIndex(_) => "validation-rejection",
                EditError::Attach(_) => "coverage",
            },
            StoreError::StaleRevision { .. } => "stale-revision",
            StoreError::EmptyUndo => "empty-undo-stack",
            StoreError::EmptyRedo => "empty-redo-stack",
            StoreError::DocumentExists(_) => "document-exists",
            StoreError::InvalidConfig(_) => "invalid-config",
            StoreError::Bundle(e) => e.code(),
            StoreError::Storage(_) | StoreError::Corrupt(_) | StoreError::Io(_) => "storage-error",
        }
    }

    /// Violations carried by a rejection, if any.
    pub fn violations(&self) -> &[Violation] {
        match self {
            StoreError::Rejected(v) => v,
            StoreError::Bundle(CesError::Invalid(v)) => v,
            _ => &[],
        }
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;
