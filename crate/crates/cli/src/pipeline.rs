//! Model-assisted segmentation and alignment over paragraph pairs.

use std::collections::BTreeSet;

use lata_core::edit::{apply_edit, Edit};
use lata_core::ids::{Level, SegmentId};
use lata_core::llm::{
    default_template, suggest, FallbackConfig, LlmProviderConfig, ParagraphPair, RequestLog, SuggestOutcome,
};
use lata_core::model::{Origin, Project, Role};
use lata_core::segmenter::{segment, SegmenterConfig};
use lata_core::workflow::accept_suggestion_edit;

use crate::failure::Failure;

/// Paragraph pairs to send to the model: the 1:1 paragraph links, or the
/// index-aligned paragraphs when there are none. A paragraph is used once.
pub fn paragraph_pairs(project: &Project) -> Vec<(SegmentId, SegmentId)> {
    let mut pairs: Vec<(SegmentId, SegmentId)> = project
        .links
        .iter()
        .filter(|l| l.level == Level::Paragraph && l.source_ids.len() == 1 && l.target_ids.len() == 1)
        .map(|l| (*l.source_ids.first().unwrap(), *l.target_ids.first().unwrap()))
        .collect();
    if pairs.is_empty() {
        pairs = project
            .source_doc
            .paragraphs
            .iter()
            .zip(&project.target_doc.paragraphs)
            .map(|(s, t)| (s.id, t.id))
            .collect();
    }
    pairs.sort();
    let (mut seen_src, mut seen_tgt) = (BTreeSet::new(), BTreeSet::new());
    pairs.retain(|(s, t)| seen_src.insert(*s) & seen_tgt.insert(*t));
    pairs
}

pub struct LlmRun {
    pub edit: Edit,
    pub pairs: usize,
    pub fallbacks: usize,
    pub warnings: Vec<String>,
}

/// One batch edit that writes a suggestion into every paragraph pair. With
/// `keep_links` false only the sentence splits are kept.
pub fn llm_edit(
    project: &Project,
    provider: &LlmProviderConfig,
    log: RequestLog,
    fallback: &FallbackConfig,
    keep_links: bool,
) -> Result<LlmRun, Failure> {
    let template = project.prompt_templates.first().cloned().unwrap_or_else(default_template);
    let mut working = project.clone();
    let mut edits = Vec::new();
    let mut run = LlmRun {
        edit: Edit::Batch { edits: Vec::new() },
        pairs: 0,
        fallbacks: 0,
        warnings: Vec::new(),
    };
    for (src, tgt) in paragraph_pairs(project) {
        let (Some(source), Some(target)) = (working.source_doc.paragraph(src), working.target_doc.paragraph(tgt)) else {
            continue;
        };
        let pair = ParagraphPair {
            source,
            target,
            source_language: &working.source_doc.meta.language,
            target_language: &working.target_doc.meta.language,
        };
        let outcome = suggest(&pair, &template, provider, Some(log.clone()), fallback)
            .map_err(|e| Failure::new(e.code(), e.to_string(), crate::failure::EXIT_VALIDATION))?;
        let origin = match &outcome {
            SuggestOutcome::Llm { .. } => Origin::Llm,
            SuggestOutcome::Baseline(f) => {
                run.fallbacks += 1;
                run.warnings.push(format!(
                    "{src}/{tgt}: using the rule-based result ({}{})",
                    f.reason.code(),
                    f.last_error.as_deref().map(|e| format!(": {e}")).unwrap_or_default()
                ));
                Origin::Baseline
            }
        };
        let mut payload = outcome.payload().clone();
        if !keep_links {
            payload.links.clear();
        }
        let edit = accept_suggestion_edit(&working, src, tgt, &payload, origin);
        apply_edit(&mut working, &edit).map_err(|e| Failure::new("rejected", e.to_string(), 1))?;
        edits.push(edit);
        run.pairs += 1;
    }
    run.edit = Edit::Batch { edits };
    Ok(run)
}

/// Rule-based sentences for paragraphs that have none yet.
pub fn segment_unsegmented(project: &Project, config: &SegmenterConfig) -> Edit {
    let mut edits = Vec::new();
    for role in [Role::Source, Role::Target] {
        let doc = project.document(role);
        for para in &doc.paragraphs {
            if !para.sentences.is_empty() || para.raw_text.trim().is_empty() {
                continue;
            }
            edits.push(Edit::AttachSentences {
                role,
                para_id: para.id,
                sentences: segment(&para.raw_text, &doc.meta.language, config),
            });
        }
    }
    Edit::Batch { edits }
}
