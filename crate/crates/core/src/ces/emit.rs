//! Serialization of the three bundle members.

use std::cmp::Ordering;

use super::escape;
use crate::ids::{Level, SegmentId};
use crate::model::{AlignmentLink, Document, DocumentMeta, Project};

pub(crate) const SOURCE_MEMBER: &str = "source.xml";
pub(crate) const TARGET_MEMBER: &str = "target.xml";
pub(crate) const ALIGNMENT_MEMBER: &str = "alignment.xml";

const DECLARATION: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";

/// Indented writer producing one element or tag per line.
struct Writer {
    out: String,
}

impl Writer {
    fn new() -> Self {
        Writer {
            out: DECLARATION.to_string(),
        }
    }

    fn line(&mut self, depth: usize, content: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(content);
        self.out.push('\n');
    }

    fn open(&mut self, depth: usize, name: &str, attrs: &[(&str, &str)]) {
        self.line(depth, &format!("{}>", start(name, attrs)));
    }

    fn close(&mut self, depth: usize, name: &str) {
        self.line(depth, &format!("</{name}>"));
    }

    /// `<name/>` when `text` is empty, otherwise `<name>text</name>`.
    fn leaf(&mut self, depth: usize, name: &str, attrs: &[(&str, &str)], text: &str) {
        let head = start(name, attrs);
        if text.is_empty() {
            self.line(depth, &format!("{head}/>"));
        } else {
            self.line(depth, &format!("{head}>{}</{name}>", escape::text(text)));
        }
    }
}

fn start(name: &str, attrs: &[(&str, &str)]) -> String {
    let mut s = format!("<{name}");
    for (k, v) in attrs {
        s.push_str(&format!(" {k}=\"{}\"", escape::attr(v)));
    }
    s
}

pub(crate) fn bibl_fields(meta: &DocumentMeta) -> [(&'static str, &str); 7] {
    [
        ("author", &meta.author),
        ("genre", &meta.genre),
        ("date", &meta.publication_date),
        ("publisher", &meta.publisher),
        ("domain", &meta.domain),
        ("docType", &meta.document_type),
        ("sourceUrl", &meta.source_url),
    ]
}

/// Text of `source.xml` or `target.xml`.
pub fn emit_document_xml(doc: &Document) -> String {
    let mut w = Writer::new();
    w.open(0, "cesDoc", &[("version", "1.0"), ("xml:lang", &doc.meta.language)]);
    w.open(1, "cesHeader", &[]);
    w.open(2, "fileDesc", &[]);
    w.open(3, "titleStmt", &[]);
    w.leaf(4, "title", &[], &doc.meta.title);
    w.close(3, "titleStmt");
    let fields = bibl_fields(&doc.meta);
    if fields.iter().any(|(_, v)| !v.is_empty()) {
        w.open(3, "bibl", &[]);
        for (name, value) in fields.iter().filter(|(_, v)| !v.is_empty()) {
            w.leaf(4, name, &[], value);
        }
        w.close(3, "bibl");
    }
    w.close(2, "fileDesc");
    w.close(1, "cesHeader");
    if doc.paragraphs.is_empty() {
        w.line(1, "<body/>");
    } else {
        w.open(1, "body", &[]);
        for para in &doc.paragraphs {
            let id = para.id.to_string();
            if para.sentences.is_empty() {
                w.leaf(2, "p", &[("id", &id)], &para.raw_text);
                continue;
            }
            let joined = joined_sentences(para);
            let mut attrs = vec![("id", id.as_str())];
            if para.raw_text != joined {
                attrs.push(("raw", &para.raw_text));
            }
            w.open(2, "p", &attrs);
            for s in &para.sentences {
                w.leaf(3, "s", &[("id", &s.id.to_string())], &s.text);
            }
            w.close(2, "p");
        }
        w.close(1, "body");
    }
    w.close(0, "cesDoc");
    w.out
}

/// Raw text implied by a segmented paragraph that carries no `raw` attribute.
pub(crate) fn joined_sentences(para: &crate::model::Paragraph) -> String {
    para.sentences.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ")
}

fn ids_vec(ids: &std::collections::BTreeSet<SegmentId>) -> Vec<SegmentId> {
    ids.iter().copied().collect()
}

/// Export order: source ids, then target ids, then the remaining content.
pub(crate) fn export_order(a: &AlignmentLink, b: &AlignmentLink) -> Ordering {
    ids_vec(&a.source_ids)
        .cmp(&ids_vec(&b.source_ids))
        .then_with(|| ids_vec(&a.target_ids).cmp(&ids_vec(&b.target_ids)))
        .then_with(|| a.comment.cmp(&b.comment))
        .then_with(|| a.techniques.cmp(&b.techniques))
        .then_with(|| a.origin.cmp(&b.origin))
        .then_with(|| a.confidence.map(f64::to_bits).cmp(&b.confidence.map(f64::to_bits)))
}

pub(crate) fn xtargets(link: &AlignmentLink) -> String {
    let side = |ids: &std::collections::BTreeSet<SegmentId>| {
        ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
    };
    format!("{} ; {}", side(&link.source_ids), side(&link.target_ids))
}

/// Links of one level in export order, paired with their export ids.
pub fn ordered_links(project: &Project, level: Level) -> Vec<(String, &AlignmentLink)> {
    let mut links: Vec<&AlignmentLink> = project.links.iter().filter(|l| l.level == level).collect();
    links.sort_by(|a, b| export_order(a, b));
    let prefix = match level {
        Level::Paragraph => "lp",
        Level::Sentence => "ls",
    };
    links
        .into_iter()
        .enumerate()
        .map(|(i, l)| (format!("{prefix}{}", i + 1), l))
        .collect()
}

/// Text of `alignment.xml`.
pub fn emit_alignment_xml(project: &Project) -> String {
    let mut w = Writer::new();
    w.open(
        0,
        "cesAlign",
        &[
            ("version", "1.0"),
            ("project", &project.project_id),
            ("created", &project.created_at),
        ],
    );
    w.open(1, "cesHeader", &[]);
    w.open(2, "fileDesc", &[]);
    w.open(3, "titleStmt", &[]);
    w.leaf(4, "title", &[], &project.name);
    w.close(3, "titleStmt");
    w.close(2, "fileDesc");
    w.open(2, "translations", &[]);
    for (member, doc) in [(SOURCE_MEMBER, &project.source_doc), (TARGET_MEMBER, &project.target_doc)] {
        w.leaf(
            3,
            "translation",
            &[("role", doc.role.as_str()), ("href", member), ("xml:lang", &doc.meta.language)],
            "",
        );
    }
    w.close(2, "translations");
    if project.taxonomy.is_empty() {
        w.line(2, "<taxonomy/>");
    } else {
        w.open(2, "taxonomy", &[]);
        for t in &project.taxonomy {
            if t.description.is_empty() && t.examples.is_empty() {
                w.leaf(3, "technique", &[("name", &t.name)], "");
                continue;
            }
            w.open(3, "technique", &[("name", &t.name)]);
            if !t.description.is_empty() {
                w.leaf(4, "desc", &[], &t.description);
            }
            for e in &t.examples {
                w.leaf(4, "example", &[], e);
            }
            w.close(3, "technique");
        }
        w.close(2, "taxonomy");
    }
    if project.prompt_templates.is_empty() {
        w.line(2, "<templates/>");
    } else {
        w.open(2, "templates", &[]);
        for t in &project.prompt_templates {
            let required = t.required_placeholders.iter().cloned().collect::<Vec<_>>().join(" ");
            w.open(
                3,
                "template",
                &[("id", &t.template_id), ("name", &t.name), ("required", &required)],
            );
            if !t.description.is_empty() {
                w.leaf(4, "desc", &[], &t.description);
            }
            w.leaf(4, "body", &[], &t.body);
            w.close(3, "template");
        }
        w.close(2, "templates");
    }
    w.close(1, "cesHeader");
    w.open(1, "linkList", &[]);
    for level in [Level::Paragraph, Level::Sentence] {
        let attrs = [("type", level.as_str()), ("fromDoc", SOURCE_MEMBER), ("toDoc", TARGET_MEMBER)];
        let links = ordered_links(project, level);
        if links.is_empty() {
            w.leaf(2, "linkGrp", &attrs, "");
            continue;
        }
        w.open(2, "linkGrp", &attrs);
        for (id, link) in links {
            let targets = xtargets(link);
            let techniques = link.techniques.iter().cloned().collect::<Vec<_>>().join(";");
            let confidence = link.confidence.map(|c| c.to_string()).unwrap_or_default();
            let mut attrs = vec![("id", id.as_str()), ("xtargets", targets.as_str())];
            if !techniques.is_empty() {
                attrs.push(("techniques", &techniques));
            }
            if !link.comment.is_empty() {
                attrs.push(("comment", &link.comment));
            }
            attrs.push(("origin", link.origin.as_str()));
            if link.confidence.is_some() {
                attrs.push(("confidence", &confidence));
            }
            w.leaf(3, "link", &attrs, "");
        }
        w.close(2, "linkGrp");
    }
    w.close(1, "linkList");
    w.close(0, "cesAlign");
    w.out
}
