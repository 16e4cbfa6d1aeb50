//! Composite edits for the segmentation and alignment steps.

use std::collections::BTreeSet;

use crate::aligner::{align, beads_to_links_over, AlignerParams};
use crate::edit::Edit;
use crate::ids::{Level, SegmentId};
use crate::llm::SuggestionPayload;
use crate::model::{AlignmentLink, Origin, Project, Role};
use crate::segmenter::{segment, SegmenterConfig};

/// Ids of sentence-level links that reference a sentence of `para` on `role`'s side.
pub fn sentence_links_touching(project: &Project, role: Role, para: SegmentId) -> Vec<String> {
    project
        .links
        .iter()
        .filter(|l| l.level == Level::Sentence)
        .filter(|l| {
            let ids = match role {
                Role::Source => &l.source_ids,
                Role::Target => &l.target_ids,
            };
            ids.iter().any(|id| id.parent() == para)
        })
        .map(|l| l.link_id.clone())
        .collect()
}

fn batch(removals: BTreeSet<String>, mut rest: Vec<Edit>) -> Edit {
    let mut edits = Vec::with_capacity(rest.len() + 1);
    if !removals.is_empty() {
        edits.push(Edit::RemoveLinks {
            link_ids: removals.into_iter().collect(),
        });
    }
    edits.append(&mut rest);
    Edit::Batch { edits }
}

/// Re-segments every paragraph of one document with the rule-based
/// segmenter. Paragraphs whose segmentation changes lose their sentence links.
pub fn segment_document_edit(project: &Project, role: Role, config: &SegmenterConfig) -> Edit {
    let doc = project.document(role);
    let mut removals = BTreeSet::new();
    let mut attaches = Vec::new();
    for para in &doc.paragraphs {
        let sentences = segment(&para.raw_text, &doc.meta.language, config);
        let current: Vec<&str> = para.sentences.iter().map(|s| s.text.as_str()).collect();
        if current == sentences.iter().map(String::as_str).collect::<Vec<_>>() {
            continue;
        }
        removals.extend(sentence_links_touching(project, role, para.id));
        attaches.push(Edit::AttachSentences {
            role,
            para_id: para.id,
            sentences,
        });
    }
    batch(removals, attaches)
}

fn sentence_ids(project: &Project, role: Role, paras: &BTreeSet<SegmentId>) -> (Vec<SegmentId>, Vec<String>) {
    let doc = project.document(role);
    paras
        .iter()
        .filter_map(|p| doc.paragraph(*p))
        .flat_map(|p| p.sentences.iter().map(|s| (s.id, s.text.clone())))
        .unzip()
}

/// Replaces the baseline links of one level with a fresh length-based
/// alignment.
///
/// Paragraphs are aligned over whole documents. Sentences are aligned within
/// each paragraph link that has both sides, or over whole documents when
/// there are no such links.
pub fn baseline_align_edit(project: &Project, level: Level, params: &AlignerParams) -> Edit {
    let removals: BTreeSet<String> = project
        .links
        .iter()
        .filter(|l| l.level == level && l.origin == Origin::Baseline)
        .map(|l| l.link_id.clone())
        .collect();
    let mut links: Vec<AlignmentLink> = Vec::new();
    let mut run = |src_ids: &[SegmentId], src: &[String], tgt_ids: &[SegmentId], tgt: &[String]| {
        let beads = align(src, tgt, params);
        links.extend(beads_to_links_over(&beads, level, src_ids, tgt_ids).expect("beads cover the inputs"));
    };
    match level {
        Level::Paragraph => {
            let texts = |role: Role| -> (Vec<SegmentId>, Vec<String>) {
                project
                    .document(role)
                    .paragraphs
                    .iter()
                    .map(|p| (p.id, p.raw_text.clone()))
                    .unzip()
            };
            let (si, st) = texts(Role::Source);
            let (ti, tt) = texts(Role::Target);
            run(&si, &st, &ti, &tt);
        }
        Level::Sentence => {
            let mut pairs: Vec<(BTreeSet<SegmentId>, BTreeSet<SegmentId>)> = project
                .links
                .iter()
                .filter(|l| l.level == Level::Paragraph && !removals.contains(&l.link_id))
                .filter(|l| !l.source_ids.is_empty() && !l.target_ids.is_empty())
                .map(|l| (l.source_ids.clone(), l.target_ids.clone()))
                .collect();
            if pairs.is_empty() {
                let all = |role: Role| project.document(role).paragraphs.iter().map(|p| p.id).collect();
                pairs.push((all(Role::Source), all(Role::Target)));
            }
            pairs.sort();
            pairs.dedup();
            for (src, tgt) in pairs {
                let (si, st) = sentence_ids(project, Role::Source, &src);
                let (ti, tt) = sentence_ids(project, Role::Target, &tgt);
                if !si.is_empty() || !ti.is_empty() {
                    run(&si, &st, &ti, &tt);
                }
            }
        }
    }
    let mut edits = Vec::new();
    if !links.is_empty() {
        edits.push(Edit::AddLinks { links });
    }
    batch(removals, edits)
}

/// Edit that writes a validated suggestion into a paragraph pair: existing
/// sentence links touching either paragraph are dropped, both paragraphs are
/// re-segmented and the suggested links are added.
pub fn accept_suggestion_edit(
    project: &Project,
    source_para: SegmentId,
    target_para: SegmentId,
    payload: &SuggestionPayload,
    origin: Origin,
) -> Edit {
    let mut removals: BTreeSet<String> = sentence_links_touching(project, Role::Source, source_para)
        .into_iter()
        .collect();
    removals.extend(sentence_links_touching(project, Role::Target, target_para));
    let texts = |s: &[crate::llm::PayloadSentence]| s.iter().map(|x| x.text.clone()).collect::<Vec<_>>();
    let links = payload
        .links
        .iter()
        .map(|l| {
            let mut link = AlignmentLink::new(Level::Sentence, l.source_ids.iter().copied(), l.target_ids.iter().copied())
                .with_origin(origin);
            link.confidence = l.confidence;
            link
        })
        .collect::<Vec<_>>();
    let mut edits = vec![
        Edit::AttachSentences {
            role: Role::Source,
            para_id: source_para,
            sentences: texts(&payload.source_sentences),
        },
        Edit::AttachSentences {
            role: Role::Target,
            para_id: target_para,
            sentences: texts(&payload.target_sentences),
        },
    ];
    if !links.is_empty() {
        edits.push(Edit::AddLinks { links });
    }
    batch(removals, edits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edit::apply_edit;
    use crate::llm::{baseline_payload, FallbackConfig, ParagraphPair};
    use crate::model::{validate_project, DocumentMeta};

    fn project() -> Project {
        let mut p = Project::new("w", DocumentMeta::with_language("en"), DocumentMeta::with_language("fr"));
        p.source_doc = p.source_doc.clone().with_paragraphs(["One here. Two there.", "Three again."]);
        p.target_doc = p.target_doc.clone().with_paragraphs(["Un ici. Deux la.", "Trois encore."]);
        p
    }

    #[test]
    fn segment_then_align_both_levels() {
        let mut p = project();
        for role in [Role::Source, Role::Target] {
            let e = segment_document_edit(&p, role, &SegmenterConfig::default());
            apply_edit(&mut p, &e).unwrap();
        }
        assert_eq!(p.source_doc.paragraphs[0].sentences.len(), 2);
        let params = AlignerParams::default();
        let e = baseline_align_edit(&p, Level::Paragraph, &params);
        apply_edit(&mut p, &e).unwrap();
        let e = baseline_align_edit(&p, Level::Sentence, &params);
        apply_edit(&mut p, &e).unwrap();
        assert_eq!(validate_project(&p), vec![]);
        let sentence_links = p.links.iter().filter(|l| l.level == Level::Sentence).count();
        assert_eq!(sentence_links, 3);
        // rerunning replaces rather than duplicates
        let e = baseline_align_edit(&p, Level::Sentence, &params);
        apply_edit(&mut p, &e).unwrap();
        assert_eq!(p.links.iter().filter(|l| l.level == Level::Sentence).count(), 3);
        // unchanged segmentation is a no-op
        assert_eq!(
            segment_document_edit(&p, Role::Source, &SegmenterConfig::default()),
            Edit::Batch { edits: vec![] }
        );
    }

    #[test]
    fn accepting_a_suggestion_replaces_touching_links() {
        let mut p = project();
        let pair_payload = {
            let (s, t) = (&p.source_doc.paragraphs[0], &p.target_doc.paragraphs[0]);
            let pair = ParagraphPair { source: s, target: t, source_language: "en", target_language: "fr" };
            baseline_payload(&pair, &FallbackConfig::default())
        };
        let e = accept_suggestion_edit(&p, SegmentId::paragraph(1), SegmentId::paragraph(1), &pair_payload, Origin::Llm);
        apply_edit(&mut p, &e).unwrap();
        assert_eq!(p.links.len(), 2);
        let again = accept_suggestion_edit(&p, SegmentId::paragraph(1), SegmentId::paragraph(1), &pair_payload, Origin::Llm);
        apply_edit(&mut p, &again).unwrap();
        assert_eq!(p.links.len(), 2);
        assert!(p.links.iter().all(|l| l.origin == Origin::Llm));
        assert_eq!(validate_project(&p), vec![]);
    }
}
