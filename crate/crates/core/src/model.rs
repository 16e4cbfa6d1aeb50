//! Project data model and its structural validation.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ids::{Level, SegmentId};
use crate::llm::PromptTemplate;
use crate::text::coverage_divergence;

/// Bibliographic record for one side of the bitext.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DocumentMeta {
    pub title: String,
    pub author: String,
    pub genre: String,
    /// `YYYY-MM-DD` or empty.
    pub publication_date: String,
    pub publisher: String,
    pub domain: String,
    pub document_type: String,
    /// BCP-47 language tag.
    pub language: String,
    pub source_url: String,
}

impl DocumentMeta {
    pub fn with_language(language: impl Into<String>) -> Self {
        DocumentMeta {
            language: language.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Target,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Source => "source",
            Role::Target => "target",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "source" => Ok(Role::Source),
            "target" => Ok(Role::Target),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: SegmentId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub id: SegmentId,
    pub raw_text: String,
    #[serde(default)]
    pub sentences: Vec<Sentence>,
}

impl Paragraph {
    pub fn new(index: u32, raw_text: impl Into<String>) -> Self {
        Paragraph {
            id: SegmentId::paragraph(index),
            raw_text: raw_text.into(),
            sentences: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub role: Role,
    pub meta: DocumentMeta,
    #[serde(default)]
    pub paragraphs: Vec<Paragraph>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, role: Role, meta: DocumentMeta) -> Self {
        Document {
            doc_id: doc_id.into(),
            role,
            meta,
            paragraphs: Vec::new(),
        }
    }

    /// Builds paragraphs `p1..pn` from raw texts.
    pub fn with_paragraphs<I, S>(mut self, texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.paragraphs = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| Paragraph::new(i as u32 + 1, t))
            .collect();
        self
    }

    pub fn paragraph(&self, id: SegmentId) -> Option<&Paragraph> {
        let idx = id.para_index() as usize;
        self.paragraphs.get(idx.checked_sub(1)?).filter(|p| p.id == id.parent())
    }

    pub fn paragraph_mut(&mut self, id: SegmentId) -> Option<&mut Paragraph> {
        let idx = id.para_index() as usize;
        self.paragraphs
            .get_mut(idx.checked_sub(1)?)
            .filter(|p| p.id == id.parent())
    }

    /// Whether `id` names an existing paragraph or sentence of this document.
    pub fn contains(&self, id: SegmentId) -> bool {
        let Some(para) = self.paragraph(id) else {
            return false;
        };
        match id.sent_index() {
            None => true,
            Some(k) => para
                .sentences
                .get(k as usize - 1)
                .is_some_and(|s| s.id == id),
        }
    }

    /// All segment ids at `level`, in document order.
    pub fn segment_ids(&self, level: Level) -> Vec<SegmentId> {
        match level {
            Level::Paragraph => self.paragraphs.iter().map(|p| p.id).collect(),
            Level::Sentence => self
                .paragraphs
                .iter()
                .flat_map(|p| p.sentences.iter().map(|s| s.id))
                .collect(),
        }
    }

    /// Text of a paragraph or sentence.
    pub fn segment_text(&self, id: SegmentId) -> Option<&str> {
        let para = self.paragraph(id)?;
        match id.sent_index() {
            None => Some(&para.raw_text),
            Some(k) => para
                .sentences
                .get(k as usize - 1)
                .filter(|s| s.id == id)
                .map(|s| s.text.as_str()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Manual,
    Llm,
    Baseline,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Manual => "manual",
            Origin::Llm => "llm",
            Origin::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "manual" => Ok(Origin::Manual),
            "llm" => Ok(Origin::Llm),
            "baseline" => Ok(Origin::Baseline),
            other => Err(format!("unknown origin `{other}`")),
        }
    }
}

/// A many-to-many link between source and target segments at one level.
///
/// Either side may be empty (a null match), but not both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentLink {
    pub link_id: String,
    pub level: Level,
    pub source_ids: BTreeSet<SegmentId>,
    pub target_ids: BTreeSet<SegmentId>,
    #[serde(default)]
    pub comment: String,
    #[serde(default)]
    pub techniques: BTreeSet<String>,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl AlignmentLink {
    /// A manual link with a fresh random id.
    pub fn new<S, T>(level: Level, sources: S, targets: T) -> Self
    where
        S: IntoIterator<Item = SegmentId>,
        T: IntoIterator<Item = SegmentId>,
    {
        AlignmentLink {
            link_id: new_link_id(),
            level,
            source_ids: sources.into_iter().collect(),
            target_ids: targets.into_iter().collect(),
            comment: String::new(),
            techniques: BTreeSet::new(),
            origin: Origin::Manual,
            confidence: None,
        }
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }
}

pub fn new_link_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

/// Bead shape of a link: `m` source segments against `n` target segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cardinality {
    pub m: usize,
    pub n: usize,
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.m, self.n)
    }
}

pub fn cardinality_of(link: &AlignmentLink) -> Cardinality {
    Cardinality {
        m: link.source_ids.len(),
        n: link.target_ids.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TechniqueDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub examples: Vec<String>,
}

impl TechniqueDef {
    pub fn named(name: impl Into<String>) -> Self {
        TechniqueDef {
            name: name.into(),
            ..Default::default()
        }
    }
}

/// Problem with a technique name, if any.
pub fn technique_name_problem(name: &str) -> Option<&'static str> {
    if name.trim().is_empty() {
        Some("technique name is empty")
    } else if name.trim() != name {
        Some("technique name has leading or trailing whitespace")
    } else if name.contains(';') {
        Some("technique name contains `;`")
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub project_id: String,
    pub name: String,
    pub source_doc: Document,
    pub target_doc: Document,
    #[serde(default)]
    pub links: Vec<AlignmentLink>,
    #[serde(default)]
    pub taxonomy: Vec<TechniqueDef>,
    #[serde(default)]
    pub prompt_templates: Vec<PromptTemplate>,
    pub created_at: String,
    pub updated_at: String,
}

impl Project {
    /// An empty project whose documents carry the given metadata.
    pub fn new(name: impl Into<String>, source_meta: DocumentMeta, target_meta: DocumentMeta) -> Self {
        let project_id = uuid::Uuid::new_v4().simple().to_string();
        let now = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
        Project {
            source_doc: Document::new(format!("{project_id}:source"), Role::Source, source_meta),
            target_doc: Document::new(format!("{project_id}:target"), Role::Target, target_meta),
            project_id,
            name: name.into(),
            links: Vec::new(),
            taxonomy: Vec::new(),
            prompt_templates: Vec::new(),
            created_at: now.clone(),
            updated_at: now,
        }
    }

    pub fn document(&self, role: Role) -> &Document {
        match role {
            Role::Source => &self.source_doc,
            Role::Target => &self.target_doc,
        }
    }

    pub fn document_mut(&mut self, role: Role) -> &mut Document {
        match role {
            Role::Source => &mut self.source_doc,
            Role::Target => &mut self.target_doc,
        }
    }

    pub fn link(&self, link_id: &str) -> Option<&AlignmentLink> {
        self.links.iter().find(|l| l.link_id == link_id)
    }

    pub fn technique(&self, name: &str) -> Option<&TechniqueDef> {
        self.taxonomy.iter().find(|t| t.name == name)
    }
}

/// Invariant identifiers reported by [`validate_project`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    InvalidLanguage,
    InvalidDate,
    DocumentRole,
    ParagraphSequence,
    SentenceSequence,
    SentenceText,
    Coverage,
    InvalidCharacter,
    EmptyLinkId,
    DuplicateLinkId,
    EmptyLink,
    LevelMismatch,
    DanglingReference,
    UnknownTechnique,
    ConfidenceRange,
    InvalidTechniqueName,
    DuplicateTechnique,
    MalformedTemplate,
    DuplicateTemplateId,
}

impl Rule {
    pub fn code(self) -> &'static str {
        match self {
            Rule::InvalidLanguage => "invalid-language",
            Rule::InvalidDate => "invalid-date",
            Rule::DocumentRole => "document-role",
            Rule::ParagraphSequence => "paragraph-sequence",
            Rule::SentenceSequence => "sentence-sequence",
            Rule::SentenceText => "sentence-text",
            Rule::Coverage => "coverage",
            Rule::InvalidCharacter => "invalid-character",
            Rule::EmptyLinkId => "empty-link-id",
            Rule::DuplicateLinkId => "duplicate-link-id",
            Rule::EmptyLink => "empty-link",
            Rule::LevelMismatch => "level-mismatch",
            Rule::DanglingReference => "dangling-reference",
            Rule::UnknownTechnique => "unknown-technique",
            Rule::ConfidenceRange => "confidence-range",
            Rule::InvalidTechniqueName => "invalid-technique-name",
            Rule::DuplicateTechnique => "duplicate-technique",
            Rule::MalformedTemplate => "malformed-template",
            Rule::DuplicateTemplateId => "duplicate-template-id",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One breached invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    /// The offending id or name.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.rule, self.subject, self.message)
    }
}

/// Well-formedness of a BCP-47 tag: a 2-3 letter primary subtag followed by
/// optional 1-8 character alphanumeric subtags.
pub fn is_well_formed_language_tag(tag: &str) -> bool {
    let mut parts = tag.split('-');
    let primary = parts.next().unwrap_or("");
    if !(2..=3).contains(&primary.len()) || !primary.bytes().all(|b| b.is_ascii_alphabetic()) {
        return false;
    }
    parts.all(|p| (1..=8).contains(&p.len()) && p.bytes().all(|b| b.is_ascii_alphanumeric()))
}

pub fn is_valid_date(date: &str) -> bool {
    date.len() == 10 && chrono::NaiveDate::parse_from_str(date, "%Y-%m-%d").is_ok()
}

/// Characters XML 1.0 cannot carry, even escaped.
pub fn is_xml_char(c: char) -> bool {
    matches!(c, '\t' | '\n' | '\r' | '\u{20}'..='\u{D7FF}' | '\u{E000}'..='\u{FFFD}' | '\u{10000}'..)
}

struct Report(Vec<Violation>);

impl Report {
    fn push(&mut self, rule: Rule, subject: impl fmt::Display, message: impl Into<String>) {
        self.0.push(Violation {
            rule,
            subject: subject.to_string(),
            message: message.into(),
        });
    }

    fn check_text(&mut self, subject: impl fmt::Display, text: &str) {
        if let Some(c) = text.chars().find(|c| !is_xml_char(*c)) {
            self.push(
                Rule::InvalidCharacter,
                subject,
                format!("contains disallowed character U+{:04X}", c as u32),
            );
        }
    }
}

fn validate_document(doc: &Document, expected_role: Role, report: &mut Report) {
    let subject = expected_role.as_str();
    if doc.role != expected_role {
        report.push(Rule::DocumentRole, subject, format!("document role is {}", doc.role));
    }
    let meta = &doc.meta;
    if !is_well_formed_language_tag(&meta.language) {
        report.push(
            Rule::InvalidLanguage,
            subject,
            format!("`{}` is not a well-formed language tag", meta.language),
        );
    }
    if !meta.publication_date.is_empty() && !is_valid_date(&meta.publication_date) {
        report.push(
            Rule::InvalidDate,
            subject,
            format!("`{}` is not a YYYY-MM-DD date", meta.publication_date),
        );
    }
    for field in [
        &meta.title,
        &meta.author,
        &meta.genre,
        &meta.publisher,
        &meta.domain,
        &meta.document_type,
        &meta.source_url,
    ] {
        report.check_text(format!("{subject} metadata"), field);
    }

    for (i, para) in doc.paragraphs.iter().enumerate() {
        let expected = SegmentId::paragraph(i as u32 + 1);
        if para.id != expected {
            report.push(
                Rule::ParagraphSequence,
                format!("{subject}:{}", para.id),
                format!("expected {expected}"),
            );
        }
        report.check_text(format!("{subject}:{}", para.id), &para.raw_text);
        for (k, sent) in para.sentences.iter().enumerate() {
            let expected = para.id.child(k as u32 + 1);
            let sid = format!("{subject}:{}", sent.id);
            if sent.id != expected {
                report.push(Rule::SentenceSequence, &sid, format!("expected {expected}"));
            }
            if sent.text.trim().is_empty() {
                report.push(Rule::SentenceText, &sid, "sentence text is empty");
            } else if sent.text.trim() != sent.text {
                report.push(Rule::SentenceText, &sid, "sentence text is not trimmed");
            }
            report.check_text(&sid, &sent.text);
        }
        if !para.sentences.is_empty() {
            let texts: Vec<&str> = para.sentences.iter().map(|s| s.text.as_str()).collect();
            if let Some(offset) = coverage_divergence(&para.raw_text, &texts) {
                report.push(
                    Rule::Coverage,
                    format!("{subject}:{}", para.id),
                    format!("sentences diverge from paragraph text at offset {offset}"),
                );
            }
        }
    }
}

/// Checks every structural invariant of a project.
///
/// Returns one [`Violation`] per breach; an empty list means the project is
/// valid.
pub fn validate_project(project: &Project) -> Vec<Violation> {
    let mut report = Report(Vec::new());
    validate_document(&project.source_doc, Role::Source, &mut report);
    validate_document(&project.target_doc, Role::Target, &mut report);

    let mut seen_names: HashMap<String, &str> = HashMap::new();
    for def in &project.taxonomy {
        if let Some(problem) = technique_name_problem(&def.name) {
            report.push(Rule::InvalidTechniqueName, format!("technique `{}`", def.name), problem);
        }
        if let Some(prev) = seen_names.insert(def.name.to_lowercase(), &def.name) {
            report.push(
                Rule::DuplicateTechnique,
                format!("technique `{}`", def.name),
                format!("clashes with `{prev}` (names are case-insensitive)"),
            );
        }
        report.check_text(format!("technique `{}`", def.name), &def.name);
        report.check_text(format!("technique `{}`", def.name), &def.description);
        for ex in &def.examples {
            report.check_text(format!("technique `{}`", def.name), ex);
        }
    }
    let known: HashSet<&str> = project.taxonomy.iter().map(|t| t.name.as_str()).collect();

    let mut seen_links = HashSet::new();
    for link in &project.links {
        let subject = format!("link {}", link.link_id);
        if link.link_id.is_empty() {
            report.push(Rule::EmptyLinkId, &subject, "link id is empty");
        }
        if !seen_links.insert(link.link_id.as_str()) {
            report.push(Rule::DuplicateLinkId, &subject, "link id is not unique");
        }
        if link.source_ids.is_empty() && link.target_ids.is_empty() {
            report.push(Rule::EmptyLink, &subject, "both sides are empty");
        }
        for (side, ids, doc) in [
            ("source", &link.source_ids, &project.source_doc),
            ("target", &link.target_ids, &project.target_doc),
        ] {
            for id in ids {
                if id.level() != link.level {
                    report.push(
                        Rule::LevelMismatch,
                        &subject,
                        format!("{side} id {id} is not a {} id", link.level),
                    );
                } else if !doc.contains(*id) {
                    report.push(
                        Rule::DanglingReference,
                        &subject,
                        format!("{side} id {id} does not exist"),
                    );
                }
            }
        }
        for t in &link.techniques {
            if !known.contains(t.as_str()) {
                report.push(
                    Rule::UnknownTechnique,
                    &subject,
                    format!("technique `{t}` is not in the taxonomy"),
                );
            }
        }
        if let Some(c) = link.confidence {
            if !(0.0..=1.0).contains(&c) {
                report.push(Rule::ConfidenceRange, &subject, format!("confidence {c} outside [0,1]"));
            }
        }
        report.check_text(&subject, &link.comment);
    }

    let mut seen_templates = HashSet::new();
    for tpl in &project.prompt_templates {
        let subject = format!("template {}", tpl.template_id);
        if !seen_templates.insert(tpl.template_id.as_str()) {
            report.push(Rule::DuplicateTemplateId, &subject, "template id is not unique");
        }
        if let Err(e) = tpl.check() {
            report.push(Rule::MalformedTemplate, &subject, e.to_string());
        }
    }
    report.0
}
