use std::path::{Path, PathBuf};
use std::sync::Arc;

use lata_core::edit::Edit;
use lata_core::ids::Level;
use lata_core::llm::FallbackConfig;
use lata_core::model::{DocumentMeta, Role, TechniqueDef};
use lata_core::workflow::{baseline_align_edit, segment_document_edit};
use lata_core::validate_project;
use lata_store::{Change, Store};
use serde_json::{json, Value};

use crate::failure::{Failure, EXIT_IO, EXIT_VALIDATION};
use crate::pipeline;
use crate::{Command, TechniqueCommand};

pub struct Output {
    pub json: Value,
    pub text: String,
    pub exit: u8,
}

impl Output {
    fn ok(json: Value, text: impl Into<String>) -> Output {
        Output {
            json,
            text: text.into(),
            exit: 0,
        }
    }
}

fn open(workspace: &Path) -> Result<Store, Failure> {
    Store::open(workspace).map_err(|e| {
        Failure::new(
            "storage-error",
            format!("cannot open workspace {}: {e}", workspace.display()),
            EXIT_IO,
        )
    })
}

fn change_json(project: &str, change: &Change) -> Value {
    json!({ "project_id": project, "revision": change.revision, "kind": change.kind, "history": change.history })
}

fn warn(message: &str) {
    eprintln!("warning: {message}");
}

pub fn run(workspace: &Path, command: Command) -> Result<Output, Failure> {
    match command {
        Command::Init {
            name,
            src_lang,
            tgt_lang,
        } => {
            let store = open(workspace)?;
            let p = store.create_project(
                &name,
                DocumentMeta::with_language(src_lang),
                DocumentMeta::with_language(tgt_lang),
            )?;
            Ok(Output::ok(
                json!({ "project_id": p.project_id, "name": p.name, "revision": 0 }),
                format!("created project {} ({})", p.name, p.project_id),
            ))
        }
        Command::List => {
            let store = open(workspace)?;
            let projects = store.list_projects()?;
            let text = projects
                .iter()
                .map(|p| {
                    format!(
                        "{}  {}  {}->{}  rev {}",
                        p.project_id, p.name, p.source_language, p.target_language, p.revision
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            Ok(Output::ok(json!({ "projects": projects }), text))
        }
        Command::Import {
            project,
            role,
            file,
            meta,
            replace,
        } => {
            let role: Role = role.into();
            let text = std::fs::read_to_string(&file).map_err(|e| Failure::io(&file, e))?;
            let meta = meta
                .map(|path| -> Result<DocumentMeta, Failure> {
                    let raw = std::fs::read_to_string(&path).map_err(|e| Failure::io(&path, e))?;
                    serde_json::from_str(&raw)
                        .map_err(|e| Failure::usage(format!("{}: invalid metadata JSON: {e}", path.display())))
                })
                .transpose()?;
            let store = open(workspace)?;
            let id = store.resolve(&project)?;
            let revision = store.import_document_with_meta(&id, role, &text, meta.as_ref(), replace)?;
            let (p, _) = store.load(&id)?;
            let n = p.document(role).paragraphs.len();
            Ok(Output::ok(
                json!({ "project_id": id, "role": role, "paragraphs": n, "revision": revision }),
                format!("imported {n} {role} paragraphs"),
            ))
        }
        Command::Segment { project, mode } => {
            let store = open(workspace)?;
            let id = store.resolve(&project)?;
            let (p, _) = store.load(&id)?;
            let config = store.config(&id)?;
            let mut fallbacks = None;
            let provider = if mode.llm { llm_provider(&store)? } else { None };
            let edit = match provider {
                Some(provider) => {
                    let fallback = FallbackConfig {
                        segmenter: config.segmenter.clone(),
                        aligner: config.aligner,
                    };
                    let run = pipeline::llm_edit(&p, &provider, store.request_log(), &fallback, false)?;
                    run.warnings.iter().for_each(|w| warn(w));
                    fallbacks = Some(run.fallbacks);
                    let mut working = p.clone();
                    lata_core::apply_edit(&mut working, &run.edit)
                        .map_err(|e| Failure::new("rejected", e.to_string(), EXIT_VALIDATION))?;
                    Edit::Batch {
                        edits: vec![run.edit, pipeline::segment_unsegmented(&working, &config.segmenter)],
                    }
                }
                None => Edit::Batch {
                    edits: [Role::Source, Role::Target]
                        .into_iter()
                        .map(|role| segment_document_edit(&p, role, &config.segmenter))
                        .collect(),
                },
            };
            let change = store.apply(&id, &edit, None)?;
            let (p, _) = store.load(&id)?;
            let count = |role: Role| p.document(role).paragraphs.iter().map(|x| x.sentences.len()).sum::<usize>();
            let mut json = change_json(&id, &change);
            json["sentences"] = json!({ "source": count(Role::Source), "target": count(Role::Target) });
            json["llm_fallbacks"] = json!(fallbacks);
            Ok(Output::ok(
                json,
                format!(
                    "segmented: {} source and {} target sentences",
                    count(Role::Source),
                    count(Role::Target)
                ),
            ))
        }
        Command::Align { project, level, mode } => {
            let level: Level = level.into();
            let store = open(workspace)?;
            let id = store.resolve(&project)?;
            let (p, _) = store.load(&id)?;
            let config = store.config(&id)?;
            let mut fallbacks = None;
            let provider = if mode.llm { llm_provider(&store)? } else { None };
            let edit = match provider {
                Some(_) if level == Level::Paragraph => {
                    warn("model suggestions work on sentences; aligning paragraphs with the baseline");
                    baseline_align_edit(&p, level, &config.aligner)
                }
                Some(provider) => {
                    let fallback = FallbackConfig {
                        segmenter: config.segmenter.clone(),
                        aligner: config.aligner,
                    };
                    let run = pipeline::llm_edit(&p, &provider, store.request_log(), &fallback, true)?;
                    run.warnings.iter().for_each(|w| warn(w));
                    fallbacks = Some(run.fallbacks);
                    run.edit
                }
                None => baseline_align_edit(&p, level, &config.aligner),
            };
            let change = store.apply(&id, &edit, None)?;
            let (p, _) = store.load(&id)?;
            let n = p.links.iter().filter(|l| l.level == level).count();
            let mut json = change_json(&id, &change);
            json["level"] = json!(level);
            json["links"] = json!(n);
            json["llm_fallbacks"] = json!(fallbacks);
            Ok(Output::ok(json, format!("{n} {level} links")))
        }
        Command::Export { project, out } => {
            let store = open(workspace)?;
            let id = store.resolve(&project)?;
            let (p, _) = store.load(&id)?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{}.zip", lata_core::ces::slug(&p.name))));
            let bytes = store.export_bundle(&id)?;
            std::fs::write(&out, &bytes).map_err(|e| Failure::io(&out, e))?;
            Ok(Output::ok(
                json!({ "project_id": id, "path": out, "bytes": bytes.len() }),
                format!("wrote {}", out.display()),
            ))
        }
        Command::Validate { target } => validate(workspace, &target),
        Command::Undo { project } => {
            let store = open(workspace)?;
            let id = store.resolve(&project)?;
            let change = store.undo(&id, None)?;
            Ok(Output::ok(change_json(&id, &change), format!("undid {}", change.kind)))
        }
        Command::Redo { project } => {
            let store = open(workspace)?;
            let id = store.resolve(&project)?;
            let change = store.redo(&id, None)?;
            Ok(Output::ok(change_json(&id, &change), format!("redid {}", change.kind)))
        }
        Command::Techniques { command } => techniques(workspace, command),
        Command::Serve { port, ui_dir } => serve(workspace, port, ui_dir),
    }
}

/// Provider settings for `--llm`, or `None` with a warning when absent.
fn llm_provider(store: &Store) -> Result<Option<lata_core::llm::LlmProviderConfig>, Failure> {
    match store.provider_config()? {
        Some(p) => Ok(Some(p)),
        None => {
            warn(&format!(
                "no {} in {}; using the rule-based pipeline",
                lata_store::PROVIDER_FILE,
                store.workspace().display()
            ));
            Ok(None)
        }
    }
}

fn validate(workspace: &Path, target: &str) -> Result<Output, Failure> {
    let path = Path::new(target);
    let (kind, result) = if path.is_file() {
        let bytes = std::fs::read(path).map_err(|e| Failure::io(path, e))?;
        ("bundle", lata_core::ces::import_bytes(&bytes).map(|_| ()).map_err(Failure::from))
    } else {
        let store = open(workspace)?;
        let id = store.resolve(target)?;
        let (p, _) = store.load(&id)?;
        let violations = validate_project(&p);
        let result = if violations.is_empty() {
            Ok(())
        } else {
            Err(Failure::from(lata_core::ces::CesError::Invalid(violations)))
        };
        ("project", result)
    };
    match result {
        Ok(()) => Ok(Output::ok(
            json!({ "target": target, "kind": kind, "valid": true, "errors": [] }),
            format!("{target}: valid"),
        )),
        Err(f) if f.exit == EXIT_VALIDATION => {
            let mut lines = vec![format!("{target}: invalid")];
            lines.push(format!("  [{}] {}", f.code, f.message));
            if let Some(v) = f.details.as_ref().and_then(|d| d["violations"].as_array()) {
                for item in v {
                    let field = |k: &str| item[k].as_str().unwrap_or_default().to_string();
                    lines.push(format!("  [{}] {}: {}", field("rule"), field("subject"), field("message")));
                }
            }
            Ok(Output {
                json: json!({
                    "target": target,
                    "kind": kind,
                    "valid": false,
                    "errors": [{ "code": f.code, "message": f.message, "details": f.details }],
                }),
                text: lines.join("\n"),
                exit: EXIT_VALIDATION,
            })
        }
        Err(f) => Err(f),
    }
}

fn techniques(workspace: &Path, command: TechniqueCommand) -> Result<Output, Failure> {
    match command {
        TechniqueCommand::Add {
            project,
            name,
            desc,
            examples,
        } => {
            let store = open(workspace)?;
            let id = store.resolve(&project)?;
            let def = TechniqueDef {
                name: name.clone(),
                description: desc,
                examples,
            };
            let change = store.apply(&id, &Edit::UpsertTechniqueDef { def }, None)?;
            Ok(Output::ok(change_json(&id, &change), format!("technique {name} saved")))
        }
        TechniqueCommand::List { project } => {
            let store = open(workspace)?;
            let id = store.resolve(&project)?;
            let (p, _) = store.load(&id)?;
            let text = p
                .taxonomy
                .iter()
                .map(|t| format!("{}  {}", t.name, t.description))
                .collect::<Vec<_>>()
                .join("\n");
            Ok(Output::ok(json!({ "project_id": id, "techniques": p.taxonomy }), text))
        }
    }
}

fn serve(workspace: &Path, port: u16, ui_dir: Option<PathBuf>) -> Result<Output, Failure> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .try_init();
    let store = Arc::new(open(workspace)?);
    let config = lata_server::ServerConfig {
        addr: std::net::SocketAddr::from((std::net::Ipv4Addr::LOCALHOST, port)),
        ui_dir,
    };
    let addr = config.addr;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::new("io-error", e.to_string(), EXIT_IO))?;
    runtime
        .block_on(lata_server::serve(store, config))
        .map_err(|e| Failure::new("io-error", format!("{addr}: {e}"), EXIT_IO))?;
    Ok(Output::ok(json!({ "stopped": true }), ""))
}
