//! Zipped three-member CES-style stand-off bundle.
//!
//! `source.xml` and `target.xml` hold the documents, `alignment.xml` holds the
//! project header, technique taxonomy, prompt templates and both link groups.

mod emit;
mod escape;
mod parse;

use std::io::{Cursor, Read, Write};
use std::path::Path;

use thiserror::Error;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipArchive, ZipWriter};

pub use emit::{emit_alignment_xml, emit_document_xml, ordered_links};

use crate::model::{validate_project, Project, Role, Violation};
use emit::{ALIGNMENT_MEMBER, SOURCE_MEMBER, TARGET_MEMBER};

/// Member names in archive order.
pub const MEMBERS: [&str; 3] = [SOURCE_MEMBER, TARGET_MEMBER, ALIGNMENT_MEMBER];

#[derive(Debug, Error)]
pub enum CesError {
    #[error("project is invalid: {}", summarize(.0))]
    Invalid(Vec<Violation>),
    #[error(
        "bundle must contain exactly source.xml, target.xml and alignment.xml; missing [{}], found [{}]",
        missing_members(.found).join(", "),
        .found.join(", ")
    )]
    WrongMemberSet { found: Vec<String> },
    #[error("{member}:{line}:{column}: malformed XML: {message}")]
    MalformedXml {
        member: String,
        line: u32,
        column: u32,
        message: String,
    },
    #[error("{member}:{line}:{column}: {message}")]
    Schema {
        member: String,
        line: u32,
        column: u32,
        message: String,
    },
    #[error("link {link} references {id}, absent from the {role} document")]
    DanglingReference { link: String, id: String, role: Role },
    #[error("duplicate link id {0}")]
    DuplicateLinkId(String),
    #[error("{member} is not valid UTF-8")]
    Encoding { member: String },
    #[error("archive error: {0}")]
    Archive(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn missing_members(found: &[String]) -> Vec<&'static str> {
    MEMBERS.iter().copied().filter(|m| !found.iter().any(|f| f == m)).collect()
}

fn summarize(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

impl CesError {
    /// Stable token for the error class.
    pub fn code(&self) -> &'static str {
        match self {
            CesError::Invalid(_) => "invalid-project",
            CesError::WrongMemberSet { .. } => "wrong-member-set",
            CesError::MalformedXml { .. } => "malformed-xml",
            CesError::Schema { .. } => "schema-violation",
            CesError::DanglingReference { .. } => "dangling-reference",
            CesError::DuplicateLinkId(_) => "duplicate-link-id",
            CesError::Encoding { .. } => "encoding",
            CesError::Archive(_) => "archive",
            CesError::Io(_) => "io",
        }
    }
}

impl From<zip::result::ZipError> for CesError {
    fn from(e: zip::result::ZipError) -> Self {
        match e {
            zip::result::ZipError::Io(io) => CesError::Io(io),
            other => CesError::Archive(other.to_string()),
        }
    }
}

/// Bundle file name: lowercase name with every non-alphanumeric replaced by `-`.
pub fn slug(name: &str) -> String {
    name.chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { '-' })
        .collect()
}

/// Serializes a valid project to zip bytes. Equal projects give equal bytes.
pub fn export_bytes(project: &Project) -> Result<Vec<u8>, CesError> {
    let violations = validate_project(project);
    if !violations.is_empty() {
        return Err(CesError::Invalid(violations));
    }
    let members = [
        (SOURCE_MEMBER, emit_document_xml(&project.source_doc)),
        (TARGET_MEMBER, emit_document_xml(&project.target_doc)),
        (ALIGNMENT_MEMBER, emit_alignment_xml(project)),
    ];
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(zip::DateTime::default())
        .unix_permissions(0o644);
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    for (name, text) in members {
        zip.start_file(name, options)?;
        zip.write_all(text.as_bytes())?;
    }
    Ok(zip.finish()?.into_inner())
}

/// Writes the bundle to `out_path`.
pub fn export(project: &Project, out_path: &Path) -> Result<(), CesError> {
    let bytes = export_bytes(project)?;
    std::fs::write(out_path, bytes)?;
    Ok(())
}

/// Reads the three members' texts, enforcing the member set.
pub fn read_members(bytes: &[u8]) -> Result<[String; 3], CesError> {
    let mut archive = ZipArchive::new(Cursor::new(bytes))?;
    let mut found: Vec<String> = archive
        .file_names()
        .map(|n| n.map(|n| n.into_owned()))
        .collect::<Result<_, _>>()?;
    found.sort();
    let mut wanted: Vec<String> = MEMBERS.iter().map(|m| m.to_string()).collect();
    wanted.sort();
    if found != wanted {
        return Err(CesError::WrongMemberSet { found });
    }
    let mut read = |name: &str| -> Result<String, CesError> {
        let mut raw = Vec::new();
        archive.by_name(name)?.read_to_end(&mut raw)?;
        String::from_utf8(raw).map_err(|_| CesError::Encoding { member: name.to_string() })
    };
    Ok([read(SOURCE_MEMBER)?, read(TARGET_MEMBER)?, read(ALIGNMENT_MEMBER)?])
}

/// Rebuilds a project from bundle bytes. Link ids are the export ids.
pub fn import_bytes(bytes: &[u8]) -> Result<Project, CesError> {
    let [source, target, alignment] = read_members(bytes)?;
    let part = parse::parse_alignment(&alignment)?;
    let source = parse::parse_document(SOURCE_MEMBER, &source, Role::Source, format!("{}:source", part.project_id))?;
    let target = parse::parse_document(TARGET_MEMBER, &target, Role::Target, format!("{}:target", part.project_id))?;
    parse::check_references(&part.links, &source, &target)?;
    if let Some(dup) = parse::duplicate_ids(&part.links) {
        return Err(CesError::DuplicateLinkId(dup));
    }
    let project = parse::assemble(part, source, target);
    let violations = validate_project(&project);
    if !violations.is_empty() {
        return Err(CesError::Invalid(violations));
    }
    Ok(project)
}

pub fn import(bundle_path: &Path) -> Result<Project, CesError> {
    import_bytes(&std::fs::read(bundle_path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::canonical_json;
    use crate::ids::{Level, SegmentId};
    use crate::model::{AlignmentLink, DocumentMeta, Origin, Sentence, TechniqueDef};

    fn sid(s: &str) -> SegmentId {
        s.parse().unwrap()
    }

    fn project() -> Project {
        let mut p = Project::new(
            "Ship & Sea: \"Vol. 1\"",
            DocumentMeta {
                author: "A".into(),
                publication_date: "2020-01-31".into(),
                ..DocumentMeta::with_language("en")
            },
            DocumentMeta::with_language("ar"),
        );
        p.source_doc = p.source_doc.clone().with_paragraphs(["One < two.\nThree?", "  tail\r\n"]);
        p.target_doc = p.target_doc.clone().with_paragraphs(["واحد > اثنان. ثلاثة؟", ""]);
        p.source_doc.paragraphs[0].sentences = vec![
            Sentence { id: sid("p1-s1"), text: "One < two.".into() },
            Sentence { id: sid("p1-s2"), text: "Three?".into() },
        ];
        p.target_doc.paragraphs[0].sentences = vec![
            Sentence { id: sid("p1-s1"), text: "واحد > اثنان.".into() },
            Sentence { id: sid("p1-s2"), text: "ثلاثة؟".into() },
        ];
        p.taxonomy = vec![
            TechniqueDef { name: "Inversion".into(), description: "order & flow".into(), examples: vec!["x".into()] },
            TechniqueDef::named("Omission"),
        ];
        p.prompt_templates = vec![crate::llm::default_template()];
        let mut l1 = AlignmentLink::new(Level::Sentence, [sid("p1-s1")], [sid("p1-s1")]).with_origin(Origin::Llm);
        l1.confidence = Some(0.8);
        l1.techniques.insert("Inversion".into());
        l1.comment = "it's \"fine\"\n\ttabbed".into();
        let l2 = AlignmentLink::new(Level::Sentence, [sid("p1-s2")], []);
        let l3 = AlignmentLink::new(Level::Paragraph, [sid("p1"), sid("p2")], [sid("p1")]);
        p.links = vec![l1, l2, l3];
        p.links.sort_by(|a, b| a.link_id.cmp(&b.link_id));
        p
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let p = project();
        let bytes = export_bytes(&p).unwrap();
        assert_eq!(bytes, export_bytes(&p).unwrap());
        let q = import_bytes(&bytes).unwrap();
        assert_eq!(export_bytes(&q).unwrap(), bytes);
        assert_eq!(q.name, p.name);
        assert_eq!(q.source_doc, p.source_doc);
        assert_eq!(q.target_doc, p.target_doc);
        assert_eq!(q.taxonomy, p.taxonomy);
        assert_eq!(q.prompt_templates, p.prompt_templates);
        assert_eq!(q.links.iter().map(|l| l.link_id.as_str()).collect::<Vec<_>>(), ["lp1", "ls1", "ls2"]);
        let mut renamed = q.clone();
        for l in &mut renamed.links {
            let original = p.links.iter().find(|o| o.source_ids == l.source_ids && o.level == l.level).unwrap();
            l.link_id = original.link_id.clone();
        }
        renamed.links.sort_by(|a, b| a.link_id.cmp(&b.link_id));
        assert_eq!(canonical_json(&renamed), canonical_json(&p));
    }

    #[test]
    fn member_order_and_timestamps_are_fixed() {
        let bytes = export_bytes(&project()).unwrap();
        let mut archive = ZipArchive::new(Cursor::new(&bytes)).unwrap();
        assert_eq!(archive.len(), 3);
        for (i, want) in MEMBERS.iter().enumerate() {
            let f = archive.by_index(i).unwrap();
            assert_eq!(f.name().unwrap(), *want);
            assert_eq!(f.last_modified(), Some(zip::DateTime::default()));
        }
    }

    fn rezip(members: &[(&str, String)]) -> Vec<u8> {
        let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
        for (name, text) in members {
            zip.start_file(*name, SimpleFileOptions::default()).unwrap();
            zip.write_all(text.as_bytes()).unwrap();
        }
        zip.finish().unwrap().into_inner()
    }

    #[test]
    fn missing_member_is_rejected() {
        let p = project();
        let bytes = rezip(&[
            ("source.xml", emit_document_xml(&p.source_doc)),
            ("target.xml", emit_document_xml(&p.target_doc)),
        ]);
        let err = import_bytes(&bytes).unwrap_err();
        assert!(matches!(err, CesError::WrongMemberSet { .. }));
        assert!(err.to_string().contains("missing [alignment.xml]"), "{err}");
    }

    #[test]
    fn dangling_reference_names_the_link() {
        let p = project();
        let alignment = emit_alignment_xml(&p).replace("xtargets=\"p1-s2 ; \"", "xtargets=\"p7-s1 ; \"");
        let bytes = rezip(&[
            ("source.xml", emit_document_xml(&p.source_doc)),
            ("target.xml", emit_document_xml(&p.target_doc)),
            ("alignment.xml", alignment),
        ]);
        match import_bytes(&bytes) {
            Err(CesError::DanglingReference { link, id, .. }) => {
                assert_eq!(link, "ls2");
                assert_eq!(id, "p7-s1");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_xml_reports_position() {
        let p = project();
        let bytes = rezip(&[
            ("source.xml", "<?xml version=\"1.0\"?>\n<cesDoc>\n  <body>\n</cesDoc>\n".to_string()),
            ("target.xml", emit_document_xml(&p.target_doc)),
            ("alignment.xml", emit_alignment_xml(&p)),
        ]);
        match import_bytes(&bytes) {
            Err(CesError::MalformedXml { member, line, .. }) => {
                assert_eq!(member, "source.xml");
                assert_eq!(line, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_project_is_not_exported() {
        let mut p = project();
        p.links[0].target_ids.insert(sid("p9"));
        assert!(matches!(export_bytes(&p), Err(CesError::Invalid(_))));
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("My Project: Vol.2"), "my-project--vol-2");
        assert_eq!(slug("ÉTÉ"), "été");
    }
}
