//! SQLite-backed project store with a persistent undo/redo command log.
//!
//! Every mutation runs in one transaction that writes the changed rows, the
//! command record and the bumped revision together, so a crash leaves either
//! the whole change or none of it.

mod error;
mod schema;
mod text;

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};
use std::time::Duration;

use lata_core::aligner::AlignerParams;
use lata_core::edit::{apply_edit, CommandKind, Edit};
use lata_core::llm::{LlmProviderConfig, RequestLog};
use lata_core::model::{validate_project, DocumentMeta, Project, Role};
use lata_core::segmenter::SegmenterConfig;
use rusqlite::{params, Connection, OptionalExtension, TransactionBehavior};
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use error::{Result, StoreError};
pub use schema::SCHEMA_VERSION;
pub use text::split_paragraphs;

/// Commands kept per project; older ones fall off the undo stack.
pub const HISTORY_LIMIT: u64 = 1000;

pub const DATABASE_FILE: &str = "annotations.db";
pub const COMMAND_LOG_FILE: &str = "project.log";
pub const REQUEST_LOG_FILE: &str = "llm-requests.log";
pub const PROVIDER_FILE: &str = "provider.json";

/// Per-project tool settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectConfig {
    pub aligner: AlignerParams,
    pub segmenter: SegmenterConfig,
}

impl ProjectConfig {
    pub fn check(&self) -> Result<()> {
        self.aligner.check().map_err(|e| StoreError::InvalidConfig(e.to_string()))?;
        self.segmenter.check().map_err(|e| StoreError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectSummary {
    pub project_id: String,
    pub name: String,
    pub source_language: String,
    pub target_language: String,
    pub created_at: String,
    pub updated_at: String,
    pub revision: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HistoryDepth {
    pub undo: u64,
    pub redo: u64,
}

/// Result of a committed mutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Change {
    pub revision: u64,
    pub kind: CommandKind,
    pub history: HistoryDepth,
}

struct Inner {
    conn: Connection,
    cache: HashMap<String, (u64, Project)>,
}

pub struct Store {
    inner: Mutex<Inner>,
    workspace: PathBuf,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("value serializes")
}

/// Workspace directory from an explicit flag, `LATA_WORKSPACE`, or `./workspace`.
pub fn workspace_dir(flag: Option<&Path>) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os("LATA_WORKSPACE")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("workspace")),
    }
}

impl Store {
    /// Opens (creating if needed) the workspace and its database.
    pub fn open(workspace: impl AsRef<Path>) -> Result<Store> {
        let workspace = workspace.as_ref().to_path_buf();
        std::fs::create_dir_all(&workspace)?;
        let mut conn = Connection::open(workspace.join(DATABASE_FILE))?;
        conn.busy_timeout(Duration::from_secs(10))?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        conn.pragma_update(None, "synchronous", "FULL")?;
        conn.pragma_update(None, "foreign_keys", "ON")?;
        schema::migrate(&mut conn)?;
        Ok(Store {
            inner: Mutex::new(Inner {
                conn,
                cache: HashMap::new(),
            }),
            workspace,
        })
    }

    pub fn workspace(&self) -> &Path {
        &self.workspace
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn log(&self, event: &str, detail: serde_json::Value) {
        let line = json!({ "ts": now(), "event": event, "detail": detail });
        if let Ok(mut f) = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.workspace.join(COMMAND_LOG_FILE))
        {
            let _ = writeln!(f, "{line}");
        }
    }

    /// Log for LLM requests made on behalf of this workspace.
    pub fn request_log(&self) -> RequestLog {
        RequestLog::new(self.workspace.join(REQUEST_LOG_FILE))
    }

    /// Provider settings from `provider.json`, if the file exists.
    pub fn provider_config(&self) -> Result<Option<LlmProviderConfig>> {
        let path = self.workspace.join(PROVIDER_FILE);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let config: LlmProviderConfig =
            serde_json::from_str(&text).map_err(|e| StoreError::InvalidConfig(format!("{PROVIDER_FILE}: {e}")))?;
        config
            .check()
            .map_err(|e| StoreError::InvalidConfig(format!("{PROVIDER_FILE}: {e}")))?;
        Ok(Some(config))
    }

    pub fn create_project(&self, name: &str, source: DocumentMeta, target: DocumentMeta) -> Result<Project> {
        let project = Project::new(name, source, target);
        let violations = validate_project(&project);
        if !violations.is_empty() {
            return Err(StoreError::Rejected(violations));
        }
        self.insert_new(&project)?;
        self.log("create", json!({ "project": project.project_id, "name": name }));
        Ok(project)
    }

    /// Stores a complete project under its own id, with empty history.
    pub fn insert_project(&self, project: &Project) -> Result<()> {
        let violations = validate_project(project);
        if !violations.is_empty() {
            return Err(StoreError::Rejected(violations));
        }
        self.insert_new(project)
    }

    fn insert_new(&self, project: &Project) -> Result<()> {
        let mut inner = self.lock();
        let tx = inner.conn.transaction_with_behavior(TransactionBehavior::Immediate)?;
        schema::insert_project_row(&tx, project, 0, &to_json(&ProjectConfig::default()))?;
        schema::write_project(&tx, None, project, 0)?;
        tx.commit()?;
        inner.cache.insert(project.project_id.clone(), (0, project.clone()));
        Ok(())
    }

    pub fn list_projects(&self) -> Result<Vec<ProjectSummary>> {
        let inner = self.lock();
        let mut stmt = inner.conn.prepare(
            "SELECT p.project_id, p.name, p.created_at, p.updated_at, p.revision, s.meta, t.meta
             FROM projects p
             JOIN documents s ON s.project_id = p.project_id AND s.role = 'source'
             JOIN documents t ON t.project_id = p.project_id AND t.role = 'target'
             ORDER BY p.created_at, p.project_id",
        )?;
        let rows = stmt.query_map([], |r| {
            Ok((
                r.get::<_, String>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, String>(2)?,
                r.get::<_, String>(3)?,
                r.get::<_, i64>(4)?,
                r.get::<_, String>(5)?,
                r.get::<_, String>(6)?,
            ))
        })?;
        rows.map(|row| {
            let (project_id, name, created_at, updated_at, revision, smeta, tmeta) = row?;
            let lang = |m: &str| {
                serde_json::from_str::<DocumentMeta>(m)
                    .map(|m| m.language)
                    .map_err(|e| StoreError::Corrupt(e.to_string()))
            };
            Ok(ProjectSummary {
                project_id,
                name,
                source_language: lang(&smeta)?,
                target_language: lang(&tmeta)?,
                created_at,
                updated_at,
                revision: revision as u64,
            })
        })
        .collect()
    }

    /// Resolves a project id, or a name that matches exactly one project.
    pub fn resolve(&self, id_or_name: &str) -> Result<String> {
        let inner = self.lock();
        if schema::read_revision(&inner.conn, id_or_name)?.is_some() {
            return Ok(id_or_name.to_string());
        }
        let ids: Vec<String> = inner
            .conn
            .prepare("SELECT project_id FROM projects WHERE name = ?1")?
            .query_map([id_or_name], |r| r.get(0))?
            .collect::<Result<_, _>>()?;
        match ids.len() {
            0 => Err(StoreError::NotFound(id_or_name.to_string())),
            1 => Ok(ids.into_iter().next().unwrap()),
            _ => Err(StoreError::AmbiguousName(id_or_name.to_string())),
        }
    }

    fn current(inner: &mut Inner, id: &str) -> Result<(Project, u64)> {
        let revision =
            schema::read_revision(&inner.conn, id)?.ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        if let Some((rev, project)) = inner.cache.get(id) {
            if *rev == revision {
                return Ok((project.clone(), revision));
            }
        }
        let (project, revision) = schema::read_project(&inner.conn, id)?;
        inner.cache.insert(id.to_string(), (revision, project.clone()));
        Ok((project, revision))
    }

    /// The project and its revision.
    pub fn load(&self, id: &str) -> Result<(Project, u64)> {
        Self::current(&mut self.lock(), id)
    }

    /// Project, revision and history depth read under one lock.
    pub fn snapshot(&self, id: &str) -> Result<(Project, u64, HistoryDepth)> {
        let mut inner = self.lock();
        let (project, revision) = Self::current(&mut inner, id)?;
        let history = history_depth(&inner.conn, id)?;
        Ok((project, revision, history))
    }

    pub fn revision(&self, id: &str) -> Result<u64> {
        schema::read_revision(&self.lock().conn, id)?.ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    pub fn history(&self, id: &str) -> Result<HistoryDepth> {
        let inner = self.lock();
        if schema::read_revision(&inner.conn, id)?.is_none() {
            return Err(StoreError::NotFound(id.to_string()));
        }
        history_depth(&inner.conn, id)
    }

    /// Id of the project holding link `link_id`.
    pub fn project_of_link(&self, link_id: &str) -> Result<String> {
        self.lock()
            .conn
            .prepare_cached("SELECT project_id FROM links WHERE link_id = ?1 LIMIT 1")?
            .query_row([link_id], |r| r.get(0))
            .optional()?
            .ok_or_else(|| StoreError::NotFound(link_id.to_string()))
    }

    pub fn delete_project(&self, id: &str) -> Result<()> {
        let mut inner = self.lock();
        let n = inner.conn.execute("DELETE FROM projects WHERE project_id = ?1", [id])?;
        inner.cache.remove(id);
        if n == 0 {
            return Err(StoreError::NotFound(id.to_string()));
        }
        drop(inner);
        self.log("delete", json!({ "project": id }));
        Ok(())
    }

    pub fn config(&self, id: &str) -> Result<ProjectConfig> {
        let inner = self.lock();
        let row = schema::read_row(&inner.conn, id)?.ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        serde_json::from_str(&row.config).map_err(|e| StoreError::Corrupt(e.to_string()))
    }

    pub fn set_config(&self, id: &str, config: &ProjectConfig) -> Result<()> {
        config.check()?;
        let inner = self.lock();
        let n = inner.conn.execute(
            "UPDATE projects SET config = ?2 WHERE project_id = ?1",
            params![id, to_json(config)],
        )?;
        if n == 0 {
            return Err(StoreError::NotFound(id.to_string()));
        }
        Ok(())
    }

    /// Applies `edit` as one undoable command. The change is rejected, and
    /// nothing is written, if it fails or leaves the project invalid.
    pub fn apply(&self, id: &str, edit: &Edit, expected_revision: Option<u64>) -> Result<Change> {
        let mut inner = self.lock();
        let inner = &mut *inner;
        let (mut project, revision) = Self::current(inner, id)?;
        check_revision(expected_revision, revision)?;
        let old = project.clone();
        let inverse = apply_edit(&mut project, edit)?;
        let violations = validate_project(&project);
        if !violations.is_empty() {
            return Err(StoreError::Rejected(violations));
        }
        project.updated_at = now();
        let new_revision = revision + 1;

        let tx = inner.conn.transaction_with_behavior(TransactionBehavior::Immediate)?;
        let committed = schema::read_revision(&tx, id)?.ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        if committed != revision {
            return Err(StoreError::StaleRevision {
                expected: revision,
                actual: committed,
            });
        }
        schema::write_project(&tx, Some(&old), &project, new_revision)?;
        tx.execute("DELETE FROM commands WHERE project_id = ?1 AND state = 'undone'", [id])?;
        let seq: i64 = tx.query_row(
            "SELECT COALESCE(MAX(seq), 0) + 1 FROM commands WHERE project_id = ?1",
            [id],
            |r| r.get(0),
        )?;
        tx.execute(
            "INSERT INTO commands (project_id, seq, kind, payload, inverse, state, created_at)
             VALUES (?1, ?2, ?3, ?4, ?5, 'applied', ?6)",
            params![id, seq, edit.kind().as_str(), to_json(edit), to_json(&inverse), project.updated_at],
        )?;
        tx.execute(
            "DELETE FROM commands WHERE project_id = ?1 AND seq <= ?2",
            params![id, seq - HISTORY_LIMIT as i64],
        )?;
        let history = history_depth(&tx, id)?;
        tx.commit()?;
        inner.cache.insert(id.to_string(), (new_revision, project));
        self.log(
            "apply",
            json!({ "project": id, "seq": seq, "kind": edit.kind().as_str(), "revision": new_revision }),
        );
        Ok(Change {
            revision: new_revision,
            kind: edit.kind(),
            history,
        })
    }

    /// Reverts the most recent applied command.
    pub fn undo(&self, id: &str, expected_revision: Option<u64>) -> Result<Change> {
        self.step(id, expected_revision, true)
    }

    /// Re-applies the most recently undone command.
    pub fn redo(&self, id: &str, expected_revision: Option<u64>) -> Result<Change> {
        self.step(id, expected_revision, false)
    }

    fn step(&self, id: &str, expected_revision: Option<u64>, undo: bool) -> Result<Change> {
        let mut inner = self.lock();
        let inner = &mut *inner;
        let (mut project, revision) = Self::current(inner, id)?;
        check_revision(expected_revision, revision)?;
        let old = project.clone();

        let tx = inner.conn.transaction_with_behavior(TransactionBehavior::Immediate)?;
        let committed = schema::read_revision(&tx, id)?.ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        if committed != revision {
            return Err(StoreError::StaleRevision {
                expected: revision,
                actual: committed,
            });
        }
        let sql = if undo {
            "SELECT seq, kind, inverse FROM commands WHERE project_id = ?1 AND state = 'applied'
             ORDER BY seq DESC LIMIT 1"
        } else {
            "SELECT seq, kind, payload FROM commands WHERE project_id = ?1 AND state = 'undone'
             ORDER BY seq ASC LIMIT 1"
        };
        let (seq, kind, body): (i64, String, String) = tx
            .query_row(sql, [id], |r| Ok((r.get(0)?, r.get(1)?, r.get(2)?)))
            .optional()?
            .ok_or(if undo { StoreError::EmptyUndo } else { StoreError::EmptyRedo })?;
        let kind = CommandKind::parse(&kind).ok_or_else(|| StoreError::Corrupt(format!("command kind `{kind}`")))?;
        let edit: Edit = serde_json::from_str(&body).map_err(|e| StoreError::Corrupt(e.to_string()))?;
        let reverse = apply_edit(&mut project, &edit)
            .map_err(|e| StoreError::Corrupt(format!("command {seq} no longer applies: {e}")))?;
        let violations = validate_project(&project);
        if !violations.is_empty() {
            return Err(StoreError::Rejected(violations));
        }
        project.updated_at = now();
        let new_revision = revision + 1;
        schema::write_project(&tx, Some(&old), &project, new_revision)?;
        if undo {
            tx.execute(
                "UPDATE commands SET state = 'undone', payload = ?3 WHERE project_id = ?1 AND seq = ?2",
                params![id, seq, to_json(&reverse)],
            )?;
        } else {
            tx.execute(
                "UPDATE commands SET state = 'applied', inverse = ?3 WHERE project_id = ?1 AND seq = ?2",
                params![id, seq, to_json(&reverse)],
            )?;
        }
        let history = history_depth(&tx, id)?;
        tx.commit()?;
        inner.cache.insert(id.to_string(), (new_revision, project));
        self.log(
            if undo { "undo" } else { "redo" },
            json!({ "project": id, "seq": seq, "kind": kind.as_str(), "revision": new_revision }),
        );
        Ok(Change {
            revision: new_revision,
            kind,
            history,
        })
    }

    /// Loads plain text into one side of the project: NFC-normalized,
    /// paragraphs separated by blank lines. Replacing an imported document
    /// drops every link touching that side and clears the undo history.
    pub fn import_document(&self, id: &str, role: Role, text: &str, replace: bool) -> Result<u64> {
        self.import_document_with_meta(id, role, text, None, replace)
    }

    /// [`Store::import_document`], also replacing the document metadata.
    pub fn import_document_with_meta(
        &self,
        id: &str,
        role: Role,
        text: &str,
        meta: Option<&DocumentMeta>,
        replace: bool,
    ) -> Result<u64> {
        let mut inner = self.lock();
        let inner = &mut *inner;
        let (mut project, revision) = Self::current(inner, id)?;
        let old = project.clone();
        if !project.document(role).paragraphs.is_empty() && !replace {
            return Err(StoreError::DocumentExists(role));
        }
        let doc = project.document_mut(role);
        if let Some(meta) = meta {
            doc.meta = meta.clone();
        }
        doc.paragraphs = split_paragraphs(text)
            .into_iter()
            .enumerate()
            .map(|(i, t)| lata_core::model::Paragraph::new(i as u32 + 1, t))
            .collect();
        project.links.retain(|l| match role {
            Role::Source => l.source_ids.is_empty(),
            Role::Target => l.target_ids.is_empty(),
        });
        let violations = validate_project(&project);
        if !violations.is_empty() {
            return Err(StoreError::Rejected(violations));
        }
        project.updated_at = now();
        let new_revision = revision + 1;
        let tx = inner.conn.transaction_with_behavior(TransactionBehavior::Immediate)?;
        schema::write_project(&tx, Some(&old), &project, new_revision)?;
        tx.execute("DELETE FROM commands WHERE project_id = ?1", [id])?;
        tx.commit()?;
        let paragraphs = project.document(role).paragraphs.len();
        inner.cache.insert(id.to_string(), (new_revision, project));
        self.log(
            "import-document",
            json!({ "project": id, "role": role.as_str(), "paragraphs": paragraphs, "revision": new_revision }),
        );
        Ok(new_revision)
    }

    /// Exchange bundle for the current state.
    pub fn export_bundle(&self, id: &str) -> Result<Vec<u8>> {
        let (project, _) = self.load(id)?;
        Ok(lata_core::ces::export_bytes(&project)?)
    }

    /// Creates a new project from a bundle. The project gets fresh project,
    /// document and link ids; `name` overrides the bundled name.
    pub fn import_bundle(&self, bytes: &[u8], name: Option<&str>) -> Result<Project> {
        let mut project = lata_core::ces::import_bytes(bytes)?;
        let fresh = Project::new(
            name.unwrap_or(&project.name),
            DocumentMeta::default(),
            DocumentMeta::default(),
        );
        project.project_id = fresh.project_id;
        project.name = fresh.name;
        project.source_doc.doc_id = fresh.source_doc.doc_id;
        project.target_doc.doc_id = fresh.target_doc.doc_id;
        for link in &mut project.links {
            link.link_id = lata_core::model::new_link_id();
        }
        project.links.sort_by(|a, b| a.link_id.cmp(&b.link_id));
        project.updated_at = now();
        self.insert_new(&project)?;
        self.log("import-bundle", json!({ "project": project.project_id, "links": project.links.len() }));
        Ok(project)
    }
}

#[cfg(test)]
mod tests {
    use lata_core::ids::{Level, SegmentId};
    use lata_core::model::AlignmentLink;

    use super::*;

    fn store() -> (tempfile::TempDir, Store) {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        (dir, store)
    }

    fn project(store: &Store) -> String {
        let p = store
            .create_project("demo", DocumentMeta::with_language("en"), DocumentMeta::with_language("ar"))
            .unwrap();
        store.import_document(&p.project_id, Role::Source, "One. Two.\n\nThree.", false).unwrap();
        store.import_document(&p.project_id, Role::Target, "Uno.\n\nDos.", false).unwrap();
        p.project_id
    }

    fn para_link() -> AlignmentLink {
        AlignmentLink::new(Level::Paragraph, [SegmentId::paragraph(1)], [SegmentId::paragraph(1)])
    }

    #[test]
    fn create_list_resolve() {
        let (_d, s) = store();
        let id = project(&s);
        let list = s.list_projects().unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].target_language, "ar");
        assert_eq!(list[0].revision, 2);
        assert_eq!(s.resolve("demo").unwrap(), id);
        assert_eq!(s.resolve(&id).unwrap(), id);
        assert_eq!(s.resolve("nope").unwrap_err().code(), "not-found");
        project(&s);
        assert_eq!(s.resolve("demo").unwrap_err().code(), "ambiguous-name");
    }

    #[test]
    fn bad_metadata_is_rejected() {
        let (_d, s) = store();
        let err = s
            .create_project("x", DocumentMeta::with_language("not a tag"), DocumentMeta::with_language("ar"))
            .unwrap_err();
        assert_eq!(err.code(), "invalid-language");
        assert!(s.list_projects().unwrap().is_empty());
    }

    #[test]
    fn apply_undo_redo() {
        let (_d, s) = store();
        let id = project(&s);
        let before = s.load(&id).unwrap().0;
        let link = para_link();
        let c = s.apply(&id, &Edit::AddLinks { links: vec![link.clone()] }, Some(2)).unwrap();
        assert_eq!(c.revision, 3);
        assert_eq!(s.project_of_link(&link.link_id).unwrap(), id);
        assert_eq!(s.project_of_link("zzz").unwrap_err().code(), "not-found");
        assert_eq!(c.history, HistoryDepth { undo: 1, redo: 0 });
        assert_eq!(s.load(&id).unwrap().0.links, vec![link.clone()]);

        let c = s.undo(&id, None).unwrap();
        assert_eq!(c.kind, CommandKind::AddLink);
        assert_eq!(c.history, HistoryDepth { undo: 0, redo: 1 });
        assert_eq!(
            lata_core::canonical_json(&s.load(&id).unwrap().0),
            lata_core::canonical_json(&before)
        );
        assert_eq!(s.undo(&id, None).unwrap_err().code(), "empty-undo-stack");

        s.redo(&id, None).unwrap();
        assert_eq!(s.load(&id).unwrap().0.links, vec![link]);
        assert_eq!(s.redo(&id, None).unwrap_err().code(), "empty-redo-stack");
    }

    #[test]
    fn new_command_clears_redo() {
        let (_d, s) = store();
        let id = project(&s);
        s.apply(&id, &Edit::AddLinks { links: vec![para_link()] }, None).unwrap();
        s.undo(&id, None).unwrap();
        let c = s.apply(&id, &Edit::AddLinks { links: vec![para_link()] }, None).unwrap();
        assert_eq!(c.history, HistoryDepth { undo: 1, redo: 0 });
    }

    #[test]
    fn stale_revision() {
        let (_d, s) = store();
        let id = project(&s);
        let err = s.apply(&id, &Edit::AddLinks { links: vec![para_link()] }, Some(1)).unwrap_err();
        assert!(matches!(err, StoreError::StaleRevision { expected: 1, actual: 2 }));
        assert_eq!(err.code(), "stale-revision");
        assert_eq!(s.revision(&id).unwrap(), 2);
    }

    #[test]
    fn rejected_edit_writes_nothing() {
        let (_d, s) = store();
        let id = project(&s);
        let bad = AlignmentLink::new(Level::Paragraph, [SegmentId::paragraph(9)], [SegmentId::paragraph(1)]);
        let err = s.apply(&id, &Edit::AddLinks { links: vec![bad] }, None).unwrap_err();
        assert_eq!(err.code(), "dangling-reference");
        assert_eq!(s.revision(&id).unwrap(), 2);
        assert_eq!(s.history(&id).unwrap(), HistoryDepth::default());
    }

    #[test]
    fn import_requires_replace() {
        let (_d, s) = store();
        let id = project(&s);
        s.apply(&id, &Edit::AddLinks { links: vec![para_link()] }, None).unwrap();
        let err = s.import_document(&id, Role::Source, "New.", false).unwrap_err();
        assert_eq!(err.code(), "document-exists");
        let meta = DocumentMeta::with_language("fr");
        s.import_document_with_meta(&id, Role::Source, "New.", Some(&meta), true).unwrap();
        let p = s.load(&id).unwrap().0;
        assert_eq!(p.source_doc.paragraphs.len(), 1);
        assert_eq!(p.source_doc.meta.language, "fr");
        assert!(p.links.is_empty());
        assert_eq!(s.history(&id).unwrap(), HistoryDepth::default());
    }

    #[test]
    fn config_round_trip() {
        let (_d, s) = store();
        let id = project(&s);
        let mut c = s.config(&id).unwrap();
        assert_eq!(c, ProjectConfig::default());
        c.aligner.variance = 3.0;
        s.set_config(&id, &c).unwrap();
        assert_eq!(s.config(&id).unwrap(), c);
        c.aligner.variance = -1.0;
        assert_eq!(s.set_config(&id, &c).unwrap_err().code(), "invalid-config");
    }

    #[test]
    fn provider_file() {
        let (d, s) = store();
        assert_eq!(s.provider_config().unwrap(), None);
        std::fs::write(
            d.path().join(PROVIDER_FILE),
            r#"{"endpoint_url":"http://127.0.0.1:9/v1/chat/completions","model_name":"m"}"#,
        )
        .unwrap();
        assert_eq!(s.provider_config().unwrap().unwrap().max_retries, 2);
        std::fs::write(d.path().join(PROVIDER_FILE), r#"{"endpoint_url":"relative","model_name":"m"}"#).unwrap();
        assert_eq!(s.provider_config().unwrap_err().code(), "invalid-config");
    }

    #[test]
    fn delete() {
        let (_d, s) = store();
        let id = project(&s);
        s.apply(&id, &Edit::AddLinks { links: vec![para_link()] }, None).unwrap();
        s.delete_project(&id).unwrap();
        assert_eq!(s.load(&id).unwrap_err().code(), "not-found");
        assert_eq!(s.delete_project(&id).unwrap_err().code(), "not-found");
    }
}

fn check_revision(expected: Option<u64>, actual: u64) -> Result<()> {
    match expected {
        Some(expected) if expected != actual => Err(StoreError::StaleRevision { expected, actual }),
        _ => Ok(()),
    }
}

fn history_depth(conn: &Connection, id: &str) -> Result<HistoryDepth> {
    let count = |state: &str| -> Result<u64> {
        Ok(conn.query_row(
            "SELECT COUNT(*) FROM commands WHERE project_id = ?1 AND state = ?2",
            params![id, state],
            |r| r.get::<_, i64>(0),
        )? as u64)
    };
    Ok(HistoryDepth {
        undo: count("applied")?,
        redo: count("undone")?,
    })
}
