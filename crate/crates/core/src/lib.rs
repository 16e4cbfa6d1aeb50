//! Core of the lata parallel-corpus aligner: the project model, rule-based
//! segmentation, length-based alignment, the LLM suggestion bridge and the
//! CES-style XML bundle format.

pub mod aligner;
pub mod canonical;
pub mod ces;
pub mod edit;
pub mod ids;
pub mod llm;
pub mod model;
pub mod segmenter;
pub mod text;
pub mod workflow;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use canonical::{canonical_json, canonical_value};
pub use edit::{apply_edit, CommandKind, Edit, EditError};
pub use ids::{Level, SegmentId};
pub use model::{
    validate_project, AlignmentLink, Document, DocumentMeta, Origin, Paragraph, Project, Role, Rule, Sentence,
    TechniqueDef, Violation,
};
