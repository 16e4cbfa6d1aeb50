//! Reading bundle members back into a project.

use std::collections::{BTreeMap, BTreeSet};

use roxmltree::{Document as XmlDoc, Node};

use super::emit::{ALIGNMENT_MEMBER, SOURCE_MEMBER, TARGET_MEMBER};
use super::CesError;
use crate::ids::{Level, SegmentId};
use crate::llm::PromptTemplate;
use crate::model::{AlignmentLink, Document, DocumentMeta, Origin, Paragraph, Project, Role, Sentence, TechniqueDef};

const XML_NS: &str = "http://www.w3.org/XML/1998/namespace";

fn schema(member: &str, node: Node<'_, '_>, message: impl Into<String>) -> CesError {
    let pos = node.document().text_pos_at(node.range().start);
    CesError::Schema {
        member: member.to_string(),
        line: pos.row,
        column: pos.col,
        message: message.into(),
    }
}

pub(crate) fn parse_xml<'a>(member: &str, text: &'a str) -> Result<XmlDoc<'a>, CesError> {
    XmlDoc::parse(text).map_err(|e| {
        let pos = e.pos();
        CesError::MalformedXml {
            member: member.to_string(),
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })
}

fn elements<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(Node::is_element)
}

/// Rejects non-whitespace text between child elements.
fn no_stray_text(member: &str, node: Node<'_, '_>) -> Result<(), CesError> {
    match node.children().find(|c| c.is_text() && !c.text().unwrap_or("").trim().is_empty()) {
        Some(t) => Err(schema(member, t, format!("unexpected text inside <{}>", node.tag_name().name()))),
        None => Ok(()),
    }
}

fn expect_name(member: &str, node: Node<'_, '_>, name: &str) -> Result<(), CesError> {
    if node.tag_name().name() == name && node.tag_name().namespace().is_none() {
        Ok(())
    } else {
        Err(schema(member, node, format!("expected <{name}>, found <{}>", node.tag_name().name())))
    }
}

fn attr<'a>(member: &str, node: Node<'a, '_>, name: &str) -> Result<&'a str, CesError> {
    node.attribute(name)
        .ok_or_else(|| schema(member, node, format!("<{}> lacks attribute `{name}`", node.tag_name().name())))
}

fn lang<'a>(member: &str, node: Node<'a, '_>) -> Result<&'a str, CesError> {
    node.attribute((XML_NS, "lang"))
        .ok_or_else(|| schema(member, node, format!("<{}> lacks xml:lang", node.tag_name().name())))
}

/// Concatenated character data of a leaf element.
fn leaf_text(member: &str, node: Node<'_, '_>) -> Result<String, CesError> {
    if let Some(child) = elements(node).next() {
        return Err(schema(member, child, format!("unexpected element inside <{}>", node.tag_name().name())));
    }
    Ok(node.children().filter_map(|c| c.text()).collect())
}

/// Children in order, checked against a sequence of `(name, optional)`.
fn single_child<'a, 'i>(member: &str, node: Node<'a, 'i>, name: &str) -> Result<Node<'a, 'i>, CesError> {
    let mut it = elements(node);
    match (it.next(), it.next()) {
        (Some(c), None) => {
            expect_name(member, c, name)?;
            Ok(c)
        }
        _ => Err(schema(member, node, format!("<{}> must contain exactly one <{name}>", node.tag_name().name()))),
    }
}

fn check_version(member: &str, root: Node<'_, '_>) -> Result<(), CesError> {
    match attr(member, root, "version")? {
        "1.0" => Ok(()),
        v => Err(schema(member, root, format!("unsupported version `{v}`"))),
    }
}

fn parse_id(member: &str, node: Node<'_, '_>, text: &str) -> Result<SegmentId, CesError> {
    text.parse().map_err(|e| schema(member, node, format!("{e}")))
}

/// Reads `source.xml` / `target.xml`.
pub(crate) fn parse_document(member: &str, text: &str, role: Role, doc_id: String) -> Result<Document, CesError> {
    let xml = parse_xml(member, text)?;
    let root = xml.root_element();
    expect_name(member, root, "cesDoc")?;
    check_version(member, root)?;
    no_stray_text(member, root)?;
    let mut meta = DocumentMeta::with_language(lang(member, root)?);

    let mut parts = elements(root);
    let header = parts.next().ok_or_else(|| schema(member, root, "missing <cesHeader>"))?;
    expect_name(member, header, "cesHeader")?;
    let body = parts.next().ok_or_else(|| schema(member, root, "missing <body>"))?;
    expect_name(member, body, "body")?;
    if let Some(extra) = parts.next() {
        return Err(schema(member, extra, "unexpected element after <body>"));
    }

    no_stray_text(member, header)?;
    let file_desc = single_child(member, header, "fileDesc")?;
    no_stray_text(member, file_desc)?;
    let mut fd = elements(file_desc);
    let title_stmt = fd.next().ok_or_else(|| schema(member, file_desc, "missing <titleStmt>"))?;
    expect_name(member, title_stmt, "titleStmt")?;
    no_stray_text(member, title_stmt)?;
    meta.title = leaf_text(member, single_child(member, title_stmt, "title")?)?;
    if let Some(bibl) = fd.next() {
        expect_name(member, bibl, "bibl")?;
        no_stray_text(member, bibl)?;
        for field in elements(bibl) {
            let value = leaf_text(member, field)?;
            let slot = match field.tag_name().name() {
                "author" => &mut meta.author,
                "genre" => &mut meta.genre,
                "date" => &mut meta.publication_date,
                "publisher" => &mut meta.publisher,
                "domain" => &mut meta.domain,
                "docType" => &mut meta.document_type,
                "sourceUrl" => &mut meta.source_url,
                other => return Err(schema(member, field, format!("unknown bibliographic field <{other}>"))),
            };
            *slot = value;
        }
        if let Some(extra) = fd.next() {
            return Err(schema(member, extra, "unexpected element in <fileDesc>"));
        }
    }

    no_stray_text(member, body)?;
    let mut paragraphs = Vec::new();
    for p in elements(body) {
        expect_name(member, p, "p")?;
        let id = parse_id(member, p, attr(member, p, "id")?)?;
        if elements(p).next().is_none() {
            paragraphs.push(Paragraph {
                id,
                raw_text: leaf_text(member, p)?,
                sentences: Vec::new(),
            });
            continue;
        }
        no_stray_text(member, p)?;
        let mut sentences = Vec::new();
        for s in elements(p) {
            expect_name(member, s, "s")?;
            sentences.push(Sentence {
                id: parse_id(member, s, attr(member, s, "id")?)?,
                text: leaf_text(member, s)?,
            });
        }
        let mut para = Paragraph {
            id,
            raw_text: String::new(),
            sentences,
        };
        para.raw_text = match p.attribute("raw") {
            Some(raw) => raw.to_string(),
            None => super::emit::joined_sentences(&para),
        };
        paragraphs.push(para);
    }
    Ok(Document {
        doc_id,
        role,
        meta,
        paragraphs,
    })
}

/// Everything `alignment.xml` carries besides the documents.
pub(crate) struct AlignmentPart {
    pub project_id: String,
    pub created_at: String,
    pub name: String,
    pub taxonomy: Vec<TechniqueDef>,
    pub templates: Vec<PromptTemplate>,
    /// Export id and link, in file order.
    pub links: Vec<AlignmentLink>,
}

fn parse_xtargets(member: &str, node: Node<'_, '_>, value: &str) -> Result<(Vec<SegmentId>, Vec<SegmentId>), CesError> {
    let mut sides = value.split(';');
    let (Some(src), Some(tgt), None) = (sides.next(), sides.next(), sides.next()) else {
        return Err(schema(member, node, format!("xtargets `{value}` must contain exactly one `;`")));
    };
    let ids = |side: &str| -> Result<Vec<SegmentId>, CesError> {
        side.split_whitespace().map(|t| parse_id(member, node, t)).collect()
    };
    Ok((ids(src)?, ids(tgt)?))
}

pub(crate) fn parse_alignment(text: &str) -> Result<AlignmentPart, CesError> {
    let member = ALIGNMENT_MEMBER;
    let xml = parse_xml(member, text)?;
    let root = xml.root_element();
    expect_name(member, root, "cesAlign")?;
    check_version(member, root)?;
    no_stray_text(member, root)?;
    let mut part = AlignmentPart {
        project_id: attr(member, root, "project")?.to_string(),
        created_at: attr(member, root, "created")?.to_string(),
        name: String::new(),
        taxonomy: Vec::new(),
        templates: Vec::new(),
        links: Vec::new(),
    };

    let mut parts = elements(root);
    let header = parts.next().ok_or_else(|| schema(member, root, "missing <cesHeader>"))?;
    expect_name(member, header, "cesHeader")?;
    let link_list = parts.next().ok_or_else(|| schema(member, root, "missing <linkList>"))?;
    expect_name(member, link_list, "linkList")?;
    if let Some(extra) = parts.next() {
        return Err(schema(member, extra, "unexpected element after <linkList>"));
    }

    no_stray_text(member, header)?;
    let mut h = elements(header);
    let mut next = |name: &str| -> Result<Node<'_, '_>, CesError> {
        let node = h.next().ok_or_else(|| schema(member, header, format!("missing <{name}>")))?;
        expect_name(member, node, name)?;
        no_stray_text(member, node)?;
        Ok(node)
    };
    let file_desc = next("fileDesc")?;
    let translations = next("translations")?;
    let taxonomy = next("taxonomy")?;
    let templates = next("templates")?;
    let title_stmt = single_child(member, file_desc, "titleStmt")?;
    no_stray_text(member, title_stmt)?;
    part.name = leaf_text(member, single_child(member, title_stmt, "title")?)?;

    let expected = [("source", SOURCE_MEMBER), ("target", TARGET_MEMBER)];
    let found: Vec<Node<'_, '_>> = elements(translations).collect();
    if found.len() != 2 {
        return Err(schema(member, translations, "expected two <translation> entries"));
    }
    for (node, (role, href)) in found.iter().zip(expected) {
        expect_name(member, *node, "translation")?;
        if attr(member, *node, "role")? != role || attr(member, *node, "href")? != href {
            return Err(schema(member, *node, format!("expected translation role={role} href={href}")));
        }
        lang(member, *node)?;
    }

    for t in elements(taxonomy) {
        expect_name(member, t, "technique")?;
        no_stray_text(member, t)?;
        let mut def = TechniqueDef::named(attr(member, t, "name")?);
        for child in elements(t) {
            match child.tag_name().name() {
                "desc" if def.description.is_empty() && def.examples.is_empty() => {
                    def.description = leaf_text(member, child)?
                }
                "example" => def.examples.push(leaf_text(member, child)?),
                other => return Err(schema(member, child, format!("unexpected <{other}> in <technique>"))),
            }
        }
        part.taxonomy.push(def);
    }

    for t in elements(templates) {
        expect_name(member, t, "template")?;
        no_stray_text(member, t)?;
        let mut tpl = PromptTemplate::new(attr(member, t, "name")?, "");
        tpl.template_id = attr(member, t, "id")?.to_string();
        tpl.required_placeholders = attr(member, t, "required")?
            .split_whitespace()
            .map(str::to_string)
            .collect::<BTreeSet<_>>();
        let children: Vec<Node<'_, '_>> = elements(t).collect();
        let body = match children.as_slice() {
            [body] => *body,
            [desc, body] => {
                expect_name(member, *desc, "desc")?;
                tpl.description = leaf_text(member, *desc)?;
                *body
            }
            _ => return Err(schema(member, t, "<template> holds an optional <desc> and a <body>")),
        };
        expect_name(member, body, "body")?;
        tpl.body = leaf_text(member, body)?;
        part.templates.push(tpl);
    }

    no_stray_text(member, link_list)?;
    let groups: Vec<Node<'_, '_>> = elements(link_list).collect();
    if groups.len() != 2 {
        return Err(schema(member, link_list, "expected two <linkGrp> elements"));
    }
    for (group, level) in groups.into_iter().zip([Level::Paragraph, Level::Sentence]) {
        expect_name(member, group, "linkGrp")?;
        no_stray_text(member, group)?;
        if attr(member, group, "type")? != level.as_str()
            || attr(member, group, "fromDoc")? != SOURCE_MEMBER
            || attr(member, group, "toDoc")? != TARGET_MEMBER
        {
            return Err(schema(member, group, format!("expected the {level} linkGrp")));
        }
        for l in elements(group) {
            expect_name(member, l, "link")?;
            leaf_text(member, l)?;
            let id = attr(member, l, "id")?;
            let (src, tgt) = parse_xtargets(member, l, attr(member, l, "xtargets")?)?;
            let mut link = AlignmentLink::new(level, src, tgt);
            link.link_id = id.to_string();
            if let Some(t) = l.attribute("techniques") {
                link.techniques = t.split(';').map(str::to_string).collect();
            }
            link.comment = l.attribute("comment").unwrap_or_default().to_string();
            link.origin = attr(member, l, "origin")?
                .parse::<Origin>()
                .map_err(|e| schema(member, l, e))?;
            if let Some(c) = l.attribute("confidence") {
                link.confidence = Some(
                    c.parse::<f64>()
                        .map_err(|_| schema(member, l, format!("confidence `{c}` is not a number")))?,
                );
            }
            part.links.push(link);
        }
    }
    Ok(part)
}

/// First link id whose targets are missing from the documents.
pub(crate) fn check_references(links: &[AlignmentLink], source: &Document, target: &Document) -> Result<(), CesError> {
    for link in links {
        for (ids, doc) in [(&link.source_ids, source), (&link.target_ids, target)] {
            if let Some(missing) = ids.iter().find(|id| !doc.contains(**id)) {
                return Err(CesError::DanglingReference {
                    link: link.link_id.clone(),
                    id: missing.to_string(),
                    role: doc.role,
                });
            }
        }
    }
    Ok(())
}

pub(crate) fn duplicate_ids(links: &[AlignmentLink]) -> Option<String> {
    let mut seen = BTreeMap::new();
    links
        .iter()
        .find(|l| seen.insert(l.link_id.as_str(), ()).is_some())
        .map(|l| l.link_id.clone())
}

pub(crate) fn assemble(part: AlignmentPart, source: Document, target: Document) -> Project {
    let mut links = part.links;
    links.sort_by(|a, b| a.link_id.cmp(&b.link_id));
    Project {
        project_id: part.project_id,
        name: part.name,
        source_doc: source,
        target_doc: target,
        links,
        taxonomy: part.taxonomy,
        prompt_templates: part.templates,
        updated_at: part.created_at.clone(),
        created_at: part.created_at,
    }
}
