//! Invertible edits over a [`Project`].
//!
//! [`apply_edit`] mutates a project and returns the edit that undoes it.
//! Links are kept sorted by `link_id`, so removing and re-adding a link
//! restores the exact prior state.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::SegmentId;
use crate::llm::PromptTemplate;
use crate::model::{AlignmentLink, DocumentMeta, Project, Role, TechniqueDef};
use crate::segmenter::{attach_sentences, AttachError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    AddLinks {
        links: Vec<AlignmentLink>,
    },
    RemoveLinks {
        link_ids: Vec<String>,
    },
    /// Replaces the link with the same id.
    ModifyLink {
        link: AlignmentLink,
    },
    SetComment {
        link_id: String,
        comment: String,
    },
    TagTechnique {
        link_id: String,
        technique: String,
    },
    UntagTechnique {
        link_id: String,
        technique: String,
    },
    SetMetadata {
        role: Role,
        meta: DocumentMeta,
    },
    /// An empty sentence list clears the paragraph's segmentation.
    AttachSentences {
        role: Role,
        para_id: SegmentId,
        sentences: Vec<String>,
    },
    /// Inserts a definition, or replaces the one whose name matches
    /// case-insensitively.
    UpsertTechniqueDef {
        def: TechniqueDef,
    },
    /// Removes a definition and untags every link carrying it.
    DeleteTechniqueDef {
        name: String,
    },
    RestoreTechniqueDef {
        index: usize,
        def: TechniqueDef,
        tagged_links: Vec<String>,
    },
    ReplaceTaxonomy {
        defs: Vec<TechniqueDef>,
    },
    UpsertTemplate {
        template: PromptTemplate,
    },
    DeleteTemplate {
        template_id: String,
    },
    RestoreTemplate {
        index: usize,
        template: PromptTemplate,
    },
    ReplaceTemplates {
        templates: Vec<PromptTemplate>,
    },
    /// Applied in order, undone in reverse; one undo step.
    Batch {
        edits: Vec<Edit>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    AddLink,
    RemoveLink,
    ModifyLink,
    SetComment,
    TagTechnique,
    UntagTechnique,
    SetMetadata,
    AttachSentences,
    UpsertTechniqueDef,
    DeleteTechniqueDef,
    UpsertTemplate,
    DeleteTemplate,
    Batch,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::AddLink => "add_link",
            CommandKind::RemoveLink => "remove_link",
            CommandKind::ModifyLink => "modify_link",
            CommandKind::SetComment => "set_comment",
            CommandKind::TagTechnique => "tag_technique",
            CommandKind::UntagTechnique => "untag_technique",
            CommandKind::SetMetadata => "set_metadata",
            CommandKind::AttachSentences => "attach_sentences",
            CommandKind::UpsertTechniqueDef => "upsert_technique_def",
            CommandKind::DeleteTechniqueDef => "delete_technique_def",
            CommandKind::UpsertTemplate => "upsert_template",
            CommandKind::DeleteTemplate => "delete_template",
            CommandKind::Batch => "batch",
        }
    }

    pub fn parse(s: &str) -> Option<CommandKind> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Edit {
    pub fn kind(&self) -> CommandKind {
        match self {
            Edit::AddLinks { .. } => CommandKind::AddLink,
            Edit::RemoveLinks { .. } => CommandKind::RemoveLink,
            Edit::ModifyLink { .. } => CommandKind::ModifyLink,
            Edit::SetComment { .. } => CommandKind::SetComment,
            Edit::TagTechnique { .. } => CommandKind::TagTechnique,
            Edit::UntagTechnique { .. } => CommandKind::UntagTechnique,
            Edit::SetMetadata { .. } => CommandKind::SetMetadata,
            Edit::AttachSentences { .. } => CommandKind::AttachSentences,
            Edit::UpsertTechniqueDef { .. } | Edit::ReplaceTaxonomy { .. } => CommandKind::UpsertTechniqueDef,
            Edit::DeleteTechniqueDef { .. } | Edit::RestoreTechniqueDef { .. } => CommandKind::DeleteTechniqueDef,
            Edit::UpsertTemplate { .. } | Edit::ReplaceTemplates { .. } => CommandKind::UpsertTemplate,
            Edit::DeleteTemplate { .. } | Edit::RestoreTemplate { .. } => CommandKind::DeleteTemplate,
            Edit::Batch { .. } => CommandKind::Batch,
        }
    }

    fn noop() -> Edit {
        Edit::Batch { edits: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("unknown link `{0}`")]
    UnknownLink(String),
    #[error("link id `{0}` already exists")]
    DuplicateLink(String),
    #[error("unknown technique `{0}`")]
    UnknownTechnique(String),
    #[error("unknown {role} paragraph {para}")]
    UnknownParagraph { role: Role, para: SegmentId },
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("index {0} out of range")]
    BadIndex(usize),
    #[error(transparent)]
    Attach(#[from] AttachError),
}

fn link_pos(project: &Project, link_id: &str) -> Result<usize, EditError> {
    project
        .links
        .binary_search_by(|l| l.link_id.as_str().cmp(link_id))
        .map_err(|_| EditError::UnknownLink(link_id.to_string()))
}

fn insert_link(project: &mut Project, link: AlignmentLink) -> Result<(), EditError> {
    match project
        .links
        .binary_search_by(|l| l.link_id.as_str().cmp(&link.link_id))
    {
        Ok(_) => Err(EditError::DuplicateLink(link.link_id)),
        Err(pos) => {
            project.links.insert(pos, link);
            Ok(())
        }
    }
}

fn technique_pos(project: &Project, name: &str) -> Option<usize> {
    let lower = name.to_lowercase();
    project.taxonomy.iter().position(|t| t.name.to_lowercase() == lower)
}

/// Applies `edit` to `project` and returns its inverse.
///
/// On error the project may be partially modified; callers apply to a clone.
pub fn apply_edit(project: &mut Project, edit: &Edit) -> Result<Edit, EditError> {
    match edit {
        Edit::AddLinks { links } => {
            for link in links {
                insert_link(project, link.clone())?;
            }
            Ok(Edit::RemoveLinks {
                link_ids: links.iter().map(|l| l.link_id.clone()).collect(),
            })
        }
        Edit::RemoveLinks { link_ids } => {
            let mut removed = Vec::with_capacity(link_ids.len());
            for id in link_ids {
                let pos = link_pos(project, id)?;
                removed.push(project.links.remove(pos));
            }
            Ok(Edit::AddLinks { links: removed })
        }
        Edit::ModifyLink { link } => {
            let pos = link_pos(project, &link.link_id)?;
            let old = std::mem::replace(&mut project.links[pos], link.clone());
            Ok(Edit::ModifyLink { link: old })
        }
        Edit::SetComment { link_id, comment } => {
            let pos = link_pos(project, link_id)?;
            let old = std::mem::replace(&mut project.links[pos].comment, comment.clone());
            Ok(Edit::SetComment {
                link_id: link_id.clone(),
                comment: old,
            })
        }
        Edit::TagTechnique { link_id, technique } => {
            let pos = link_pos(project, link_id)?;
            if project.links[pos].techniques.insert(technique.clone()) {
                Ok(Edit::UntagTechnique {
                    link_id: link_id.clone(),
                    technique: technique.clone(),
                })
            } else {
                Ok(Edit::noop())
            }
        }
        Edit::UntagTechnique { link_id, technique } => {
            let pos = link_pos(project, link_id)?;
            if project.links[pos].techniques.remove(technique) {
                Ok(Edit::TagTechnique {
                    link_id: link_id.clone(),
                    technique: technique.clone(),
                })
            } else {
                Ok(Edit::noop())
            }
        }
        Edit::SetMetadata { role, meta } => {
            let old = std::mem::replace(&mut project.document_mut(*role).meta, meta.clone());
            Ok(Edit::SetMetadata { role: *role, meta: old })
        }
        Edit::AttachSentences { role, para_id, sentences } => {
            let para = project
                .document_mut(*role)
                .paragraph_mut(*para_id)
                .filter(|_| para_id.sent_index().is_none())
                .ok_or(EditError::UnknownParagraph {
                    role: *role,
                    para: *para_id,
                })?;
            let old: Vec<String> = para.sentences.iter().map(|s| s.text.clone()).collect();
            if sentences.is_empty() {
                para.sentences.clear();
            } else {
                *para = attach_sentences(para, sentences)?;
            }
            Ok(Edit::AttachSentences {
                role: *role,
                para_id: *para_id,
                sentences: old,
            })
        }
        Edit::UpsertTechniqueDef { def } => match technique_pos(project, &def.name) {
            Some(pos) => {
                let old = std::mem::replace(&mut project.taxonomy[pos], def.clone());
                Ok(Edit::UpsertTechniqueDef { def: old })
            }
            None => {
                project.taxonomy.push(def.clone());
                Ok(Edit::DeleteTechniqueDef { name: def.name.clone() })
            }
        },
        Edit::DeleteTechniqueDef { name } => {
            let index = technique_pos(project, name).ok_or_else(|| EditError::UnknownTechnique(name.clone()))?;
            let def = project.taxonomy.remove(index);
            let mut tagged_links = Vec::new();
            for link in &mut project.links {
                if link.techniques.remove(&def.name) {
                    tagged_links.push(link.link_id.clone());
                }
            }
            Ok(Edit::RestoreTechniqueDef {
                index,
                def,
                tagged_links,
            })
        }
        Edit::RestoreTechniqueDef {
            index,
            def,
            tagged_links,
        } => {
            if *index > project.taxonomy.len() {
                return Err(EditError::BadIndex(*index));
            }
            for id in tagged_links {
                let pos = link_pos(project, id)?;
                project.links[pos].techniques.insert(def.name.clone());
            }
            project.taxonomy.insert(*index, def.clone());
            Ok(Edit::DeleteTechniqueDef { name: def.name.clone() })
        }
        Edit::ReplaceTaxonomy { defs } => {
            let old = std::mem::replace(&mut project.taxonomy, defs.clone());
            Ok(Edit::ReplaceTaxonomy { defs: old })
        }
        Edit::UpsertTemplate { template } => {
            match project
                .prompt_templates
                .iter()
                .position(|t| t.template_id == template.template_id)
            {
                Some(pos) => {
                    let old = std::mem::replace(&mut project.prompt_templates[pos], template.clone());
                    Ok(Edit::UpsertTemplate { template: old })
                }
                None => {
                    project.prompt_templates.push(template.clone());
                    Ok(Edit::DeleteTemplate {
                        template_id: template.template_id.clone(),
                    })
                }
            }
        }
        Edit::DeleteTemplate { template_id } => {
            let index = project
                .prompt_templates
                .iter()
                .position(|t| &t.template_id == template_id)
                .ok_or_else(|| EditError::UnknownTemplate(template_id.clone()))?;
            let template = project.prompt_templates.remove(index);
            Ok(Edit::RestoreTemplate { index, template })
        }
        Edit::RestoreTemplate { index, template } => {
            if *index > project.prompt_templates.len() {
                return Err(EditError::BadIndex(*index));
            }
            project.prompt_templates.insert(*index, template.clone());
            Ok(Edit::DeleteTemplate {
                template_id: template.template_id.clone(),
            })
        }
        Edit::ReplaceTemplates { templates } => {
            let old = std::mem::replace(&mut project.prompt_templates, templates.clone());
            Ok(Edit::ReplaceTemplates { templates: old })
        }
        Edit::Batch { edits } => {
            let mut inverses = Vec::with_capacity(edits.len());
            for e in edits {
                inverses.push(apply_edit(project, e)?);
            }
            inverses.reverse();
            Ok(Edit::Batch { edits: inverses })
        }
    }
}
