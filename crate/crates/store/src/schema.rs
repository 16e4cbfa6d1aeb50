//! Table layout, migrations and whole-project row mapping.

use std::collections::BTreeSet;

use lata_core::ids::{Level, SegmentId};
use lata_core::llm::PromptTemplate;
use lata_core::model::{
    AlignmentLink, Document, DocumentMeta, Origin, Paragraph, Project, Role, Sentence, TechniqueDef,
};
use rusqlite::{params, Connection, OptionalExtension, Transaction};

use crate::error::{Result, StoreError};

/// Forward migrations; the schema version is the number applied.
const MIGRATIONS: &[&str] = &[r#"
CREATE TABLE projects (
    project_id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    created_at TEXT NOT NULL,
    updated_at TEXT NOT NULL,
    revision INTEGER NOT NULL,
    config TEXT NOT NULL
);
CREATE TABLE documents (
    project_id TEXT NOT NULL REFERENCES projects(project_id) ON DELETE CASCADE,
    role TEXT NOT NULL,
    doc_id TEXT NOT NULL,
    meta TEXT NOT NULL,
    PRIMARY KEY (project_id, role)
);
CREATE TABLE paragraphs (
    project_id TEXT NOT NULL REFERENCES projects(project_id) ON DELETE CASCADE,
    role TEXT NOT NULL,
    para INTEGER NOT NULL,
    raw_text TEXT NOT NULL,
    PRIMARY KEY (project_id, role, para)
);
CREATE TABLE sentences (
    project_id TEXT NOT NULL REFERENCES projects(project_id) ON DELETE CASCADE,
    role TEXT NOT NULL,
    para INTEGER NOT NULL,
    sent INTEGER NOT NULL,
    text TEXT NOT NULL,
    PRIMARY KEY (project_id, role, para, sent)
);
CREATE TABLE links (
    project_id TEXT NOT NULL REFERENCES projects(project_id) ON DELETE CASCADE,
    link_id TEXT NOT NULL,
    level TEXT NOT NULL,
    source_ids TEXT NOT NULL,
    target_ids TEXT NOT NULL,
    comment TEXT NOT NULL,
    origin TEXT NOT NULL,
    confidence REAL,
    PRIMARY KEY (project_id, link_id)
);
CREATE TABLE link_techniques (
    project_id TEXT NOT NULL,
    link_id TEXT NOT NULL,
    technique TEXT NOT NULL,
    PRIMARY KEY (project_id, link_id, technique),
    FOREIGN KEY (project_id, link_id) REFERENCES links(project_id, link_id) ON DELETE CASCADE
);
CREATE TABLE techniques (
    project_id TEXT NOT NULL REFERENCES projects(project_id) ON DELETE CASCADE,
    position INTEGER NOT NULL,
    name TEXT NOT NULL,
    description TEXT NOT NULL,
    examples TEXT NOT NULL,
    PRIMARY KEY (project_id, position)
);
CREATE TABLE templates (
    project_id TEXT NOT NULL REFERENCES projects(project_id) ON DELETE CASCADE,
    position INTEGER NOT NULL,
    template_id TEXT NOT NULL,
    name TEXT NOT NULL,
    body TEXT NOT NULL,
    required TEXT NOT NULL,
    description TEXT NOT NULL,
    PRIMARY KEY (project_id, position)
);
CREATE TABLE commands (
    project_id TEXT NOT NULL REFERENCES projects(project_id) ON DELETE CASCADE,
    seq INTEGER NOT NULL,
    kind TEXT NOT NULL,
    payload TEXT NOT NULL,
    inverse TEXT NOT NULL,
    state TEXT NOT NULL CHECK (state IN ('applied', 'undone')),
    created_at TEXT NOT NULL,
    PRIMARY KEY (project_id, seq)
);
"#];

pub const SCHEMA_VERSION: u32 = MIGRATIONS.len() as u32;

pub fn migrate(conn: &mut Connection) -> Result<()> {
    let tx = conn.transaction()?;
    tx.execute("CREATE TABLE IF NOT EXISTS schema_version (version INTEGER NOT NULL)", [])?;
    let current: Option<u32> = tx
        .query_row("SELECT version FROM schema_version", [], |r| r.get(0))
        .optional()?;
    let current = current.unwrap_or(0);
    if current > SCHEMA_VERSION {
        return Err(StoreError::Corrupt(format!(
            "database schema version {current} is newer than this build ({SCHEMA_VERSION})"
        )));
    }
    for sql in &MIGRATIONS[current as usize..] {
        tx.execute_batch(sql)?;
    }
    tx.execute("DELETE FROM schema_version", [])?;
    tx.execute("INSERT INTO schema_version (version) VALUES (?1)", [SCHEMA_VERSION])?;
    tx.commit()?;
    Ok(())
}

fn ids_text(ids: &BTreeSet<SegmentId>) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_ids(text: &str) -> Result<BTreeSet<SegmentId>> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|e| StoreError::Corrupt(format!("{e}"))))
        .collect()
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("value serializes")
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| StoreError::Corrupt(e.to_string()))
}

pub fn insert_project_row(tx: &Transaction<'_>, p: &Project, revision: u64, config: &str) -> Result<()> {
    tx.execute(
        "INSERT INTO projects (project_id, name, created_at, updated_at, revision, config)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
        params![p.project_id, p.name, p.created_at, p.updated_at, revision as i64, config],
    )?;
    Ok(())
}

fn write_document(tx: &Transaction<'_>, pid: &str, doc: &Document) -> Result<()> {
    let role = doc.role.as_str();
    tx.execute("DELETE FROM documents WHERE project_id = ?1 AND role = ?2", params![pid, role])?;
    tx.execute("DELETE FROM paragraphs WHERE project_id = ?1 AND role = ?2", params![pid, role])?;
    tx.execute("DELETE FROM sentences WHERE project_id = ?1 AND role = ?2", params![pid, role])?;
    tx.execute(
        "INSERT INTO documents (project_id, role, doc_id, meta) VALUES (?1, ?2, ?3, ?4)",
        params![pid, role, doc.doc_id, to_json(&doc.meta)],
    )?;
    let mut para_stmt =
        tx.prepare_cached("INSERT INTO paragraphs (project_id, role, para, raw_text) VALUES (?1, ?2, ?3, ?4)")?;
    let mut sent_stmt = tx.prepare_cached(
        "INSERT INTO sentences (project_id, role, para, sent, text) VALUES (?1, ?2, ?3, ?4, ?5)",
    )?;
    for para in &doc.paragraphs {
        para_stmt.execute(params![pid, role, para.id.para_index(), para.raw_text])?;
        for s in &para.sentences {
            sent_stmt.execute(params![pid, role, para.id.para_index(), s.id.sent_index(), s.text])?;
        }
    }
    Ok(())
}

fn delete_link(tx: &Transaction<'_>, pid: &str, link_id: &str) -> Result<()> {
    tx.execute("DELETE FROM link_techniques WHERE project_id = ?1 AND link_id = ?2", params![pid, link_id])?;
    tx.execute("DELETE FROM links WHERE project_id = ?1 AND link_id = ?2", params![pid, link_id])?;
    Ok(())
}

fn insert_link(tx: &Transaction<'_>, pid: &str, l: &AlignmentLink) -> Result<()> {
    tx.prepare_cached(
        "INSERT INTO links (project_id, link_id, level, source_ids, target_ids, comment, origin, confidence)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
    )?
    .execute(params![
        pid,
        l.link_id,
        l.level.as_str(),
        ids_text(&l.source_ids),
        ids_text(&l.target_ids),
        l.comment,
        l.origin.as_str(),
        l.confidence,
    ])?;
    let mut stmt =
        tx.prepare_cached("INSERT INTO link_techniques (project_id, link_id, technique) VALUES (?1, ?2, ?3)")?;
    for t in &l.techniques {
        stmt.execute(params![pid, l.link_id, t])?;
    }
    Ok(())
}

fn write_links(tx: &Transaction<'_>, pid: &str, old: &[AlignmentLink], new: &[AlignmentLink]) -> Result<()> {
    // both lists are sorted by link id
    let (mut i, mut j) = (0, 0);
    while i < old.len() || j < new.len() {
        match (old.get(i), new.get(j)) {
            (Some(a), Some(b)) if a.link_id == b.link_id => {
                if a != b {
                    delete_link(tx, pid, &a.link_id)?;
                    insert_link(tx, pid, b)?;
                }
                i += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a.link_id < b.link_id => {
                delete_link(tx, pid, &a.link_id)?;
                i += 1;
            }
            (Some(a), None) => {
                delete_link(tx, pid, &a.link_id)?;
                i += 1;
            }
            (_, Some(b)) => {
                insert_link(tx, pid, b)?;
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    Ok(())
}

fn write_taxonomy(tx: &Transaction<'_>, pid: &str, defs: &[TechniqueDef]) -> Result<()> {
    tx.execute("DELETE FROM techniques WHERE project_id = ?1", [pid])?;
    let mut stmt = tx.prepare_cached(
        "INSERT INTO techniques (project_id, position, name, description, examples) VALUES (?1, ?2, ?3, ?4, ?5)",
    )?;
    for (i, d) in defs.iter().enumerate() {
        stmt.execute(params![pid, i as i64, d.name, d.description, to_json(&d.examples)])?;
    }
    Ok(())
}

fn write_templates(tx: &Transaction<'_>, pid: &str, templates: &[PromptTemplate]) -> Result<()> {
    tx.execute("DELETE FROM templates WHERE project_id = ?1", [pid])?;
    let mut stmt = tx.prepare_cached(
        "INSERT INTO templates (project_id, position, template_id, name, body, required, description)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
    )?;
    for (i, t) in templates.iter().enumerate() {
        stmt.execute(params![
            pid,
            i as i64,
            t.template_id,
            t.name,
            t.body,
            to_json(&t.required_placeholders),
            t.description
        ])?;
    }
    Ok(())
}

/// Writes the parts of `new` that differ from `old` (everything when `old`
/// is `None`) and the project row's mutable columns.
pub fn write_project(tx: &Transaction<'_>, old: Option<&Project>, new: &Project, revision: u64) -> Result<()> {
    let pid = new.project_id.as_str();
    for role in [Role::Source, Role::Target] {
        if old.map(|o| o.document(role)) != Some(new.document(role)) {
            write_document(tx, pid, new.document(role))?;
        }
    }
    write_links(tx, pid, old.map_or(&[][..], |o| &o.links), &new.links)?;
    if old.map(|o| &o.taxonomy) != Some(&new.taxonomy) {
        write_taxonomy(tx, pid, &new.taxonomy)?;
    }
    if old.map(|o| &o.prompt_templates) != Some(&new.prompt_templates) {
        write_templates(tx, pid, &new.prompt_templates)?;
    }
    tx.execute(
        "UPDATE projects SET name = ?2, updated_at = ?3, revision = ?4 WHERE project_id = ?1",
        params![pid, new.name, new.updated_at, revision as i64],
    )?;
    Ok(())
}

fn read_document(conn: &Connection, pid: &str, role: Role) -> Result<Document> {
    let (doc_id, meta): (String, String) = conn
        .prepare_cached("SELECT doc_id, meta FROM documents WHERE project_id = ?1 AND role = ?2")?
        .query_row(params![pid, role.as_str()], |r| Ok((r.get(0)?, r.get(1)?)))
        .optional()?
        .ok_or_else(|| StoreError::Corrupt(format!("project {pid} lacks its {role} document")))?;
    let meta: DocumentMeta = from_json(&meta)?;
    let mut paragraphs: Vec<Paragraph> = conn
        .prepare_cached("SELECT para, raw_text FROM paragraphs WHERE project_id = ?1 AND role = ?2 ORDER BY para")?
        .query_map(params![pid, role.as_str()], |r| {
            Ok(Paragraph::new(r.get::<_, u32>(0)?, r.get::<_, String>(1)?))
        })?
        .collect::<Result<_, _>>()?;
    let mut stmt = conn.prepare_cached(
        "SELECT para, sent, text FROM sentences WHERE project_id = ?1 AND role = ?2 ORDER BY para, sent",
    )?;
    let rows = stmt.query_map(params![pid, role.as_str()], |r| {
        Ok((r.get::<_, u32>(0)?, r.get::<_, u32>(1)?, r.get::<_, String>(2)?))
    })?;
    for row in rows {
        let (para, sent, text) = row?;
        let target = paragraphs
            .get_mut(para as usize - 1)
            .filter(|p| p.id.para_index() == para)
            .ok_or_else(|| StoreError::Corrupt(format!("sentence p{para}-s{sent} has no paragraph")))?;
        target.sentences.push(Sentence {
            id: SegmentId::sentence(para, sent),
            text,
        });
    }
    Ok(Document {
        doc_id,
        role,
        meta,
        paragraphs,
    })
}

/// Project row fields besides the document content.
pub struct ProjectRow {
    pub name: String,
    pub created_at: String,
    pub updated_at: String,
    pub revision: u64,
    pub config: String,
}

pub fn read_row(conn: &Connection, pid: &str) -> Result<Option<ProjectRow>> {
    Ok(conn
        .prepare_cached("SELECT name, created_at, updated_at, revision, config FROM projects WHERE project_id = ?1")?
        .query_row([pid], |r| {
            Ok(ProjectRow {
                name: r.get(0)?,
                created_at: r.get(1)?,
                updated_at: r.get(2)?,
                revision: r.get::<_, i64>(3)? as u64,
                config: r.get(4)?,
            })
        })
        .optional()?)
}

pub fn read_revision(conn: &Connection, pid: &str) -> Result<Option<u64>> {
    Ok(conn
        .prepare_cached("SELECT revision FROM projects WHERE project_id = ?1")?
        .query_row([pid], |r| r.get::<_, i64>(0))
        .optional()?
        .map(|r| r as u64))
}

pub fn read_project(conn: &Connection, pid: &str) -> Result<(Project, u64)> {
    let row = read_row(conn, pid)?.ok_or_else(|| StoreError::NotFound(pid.to_string()))?;
    let source_doc = read_document(conn, pid, Role::Source)?;
    let target_doc = read_document(conn, pid, Role::Target)?;

    let mut links: Vec<AlignmentLink> = Vec::new();
    {
        let mut stmt = conn.prepare_cached(
            "SELECT link_id, level, source_ids, target_ids, comment, origin, confidence
             FROM links WHERE project_id = ?1 ORDER BY link_id",
        )?;
        let rows = stmt.query_map([pid], |r| {
            Ok((
                r.get::<_, String>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, String>(2)?,
                r.get::<_, String>(3)?,
                r.get::<_, String>(4)?,
                r.get::<_, String>(5)?,
                r.get::<_, Option<f64>>(6)?,
            ))
        })?;
        for row in rows {
            let (link_id, level, src, tgt, comment, origin, confidence) = row?;
            links.push(AlignmentLink {
                link_id,
                level: level.parse::<Level>().map_err(|e| StoreError::Corrupt(e.to_string()))?,
                source_ids: parse_ids(&src)?,
                target_ids: parse_ids(&tgt)?,
                comment,
                techniques: BTreeSet::new(),
                origin: origin.parse::<Origin>().map_err(StoreError::Corrupt)?,
                confidence,
            });
        }
    }
    {
        let mut stmt =
            conn.prepare_cached("SELECT link_id, technique FROM link_techniques WHERE project_id = ?1")?;
        let rows = stmt.query_map([pid], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?)))?;
        for row in rows {
            let (link_id, technique) = row?;
            let pos = links
                .binary_search_by(|l| l.link_id.as_str().cmp(&link_id))
                .map_err(|_| StoreError::Corrupt(format!("tag on missing link {link_id}")))?;
            links[pos].techniques.insert(technique);
        }
    }
    let taxonomy = conn
        .prepare_cached("SELECT name, description, examples FROM techniques WHERE project_id = ?1 ORDER BY position")?
        .query_map([pid], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?, r.get::<_, String>(2)?)))?
        .map(|row| {
            let (name, description, examples) = row?;
            Ok(TechniqueDef {
                name,
                description,
                examples: from_json(&examples)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let prompt_templates = conn
        .prepare_cached(
            "SELECT template_id, name, body, required, description FROM templates
             WHERE project_id = ?1 ORDER BY position",
        )?
        .query_map([pid], |r| {
            Ok((
                r.get::<_, String>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, String>(2)?,
                r.get::<_, String>(3)?,
                r.get::<_, String>(4)?,
            ))
        })?
        .map(|row| {
            let (template_id, name, body, required, description) = row?;
            Ok(PromptTemplate {
                template_id,
                name,
                body,
                required_placeholders: from_json(&required)?,
                description,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let project = Project {
        project_id: pid.to_string(),
        name: row.name,
        source_doc,
        target_doc,
        links,
        taxonomy,
        prompt_templates,
        created_at: row.created_at,
        updated_at: row.updated_at,
    };
    Ok((project, row.revision))
}
