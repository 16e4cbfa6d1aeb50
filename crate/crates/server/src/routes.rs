use std::collections::BTreeSet;

use axum::body::{Body, Bytes};
use axum::extract::{FromRequestParts, Path, State};
use axum::http::request::Parts;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use lata_core::edit::Edit;
use lata_core::ids::{Level, SegmentId};
use lata_core::llm::{
    default_template, validate_payload, FallbackConfig, FallbackReason, FallbackResult, ParagraphPair,
    PromptTemplate, SuggestOutcome, SuggestionPayload,
};
use lata_core::model::{AlignmentLink, DocumentMeta, Origin, Paragraph, Project, Role, TechniqueDef};
use lata_core::workflow::accept_suggestion_edit;
use lata_core::validate_project;
use lata_store::{Change, HistoryDepth, Store};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::idempotency::StoredResponse;
use crate::{ApiError, AppState, EXPECTED_REVISION_HEADER, REPLAYED_HEADER, REQUEST_TOKEN_HEADER};

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let body: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn parse_role(role: &str) -> ApiResult<Role> {
    role.parse().map_err(ApiError::bad_request)
}

fn parse_paragraph_id(text: &str) -> ApiResult<SegmentId> {
    match text.parse::<SegmentId>() {
        Ok(id) if id.level() == Level::Paragraph => Ok(id),
        _ => Err(ApiError::bad_request(format!("`{text}` is not a paragraph id"))),
    }
}

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal-error", e.to_string()))?
}

fn history_json(history: HistoryDepth) -> Value {
    json!({
        "history": history,
        "can_undo": history.undo > 0,
        "can_redo": history.redo > 0,
    })
}

fn change_json(change: &Change) -> Value {
    let mut v = history_json(change.history);
    v["revision"] = json!(change.revision);
    v["kind"] = json!(change.kind);
    v
}

/// Request token, expected revision and replay key of a mutating request.
pub struct Mutation {
    key: String,
    expected: Option<u64>,
}

impl<S: Send + Sync> FromRequestParts<S> for Mutation {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _state: &S) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(REQUEST_TOKEN_HEADER)
            .and_then(|v| v.to_str().ok())
            .filter(|v| !v.trim().is_empty())
            .ok_or_else(|| {
                ApiError::new(
                    StatusCode::BAD_REQUEST,
                    "missing-request-token",
                    format!("mutations require the {REQUEST_TOKEN_HEADER} header"),
                )
            })?;
        let expected = match parts.headers.get(EXPECTED_REVISION_HEADER) {
            None => None,
            Some(v) => Some(
                v.to_str()
                    .ok()
                    .and_then(|v| v.trim().parse::<u64>().ok())
                    .ok_or_else(|| ApiError::bad_request(format!("{EXPECTED_REVISION_HEADER} must be an integer")))?,
            ),
        };
        Ok(Mutation {
            key: format!("{} {} {}", parts.method, parts.uri.path(), token),
            expected,
        })
    }
}

fn json_response(status: StatusCode, body: Bytes) -> Response {
    let mut response = (status, body).into_response();
    response
        .headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    response
}

/// Runs `f` once per request token. Successful responses are cached and
/// replayed for repeats; failures are not, so a corrected retry can succeed.
async fn run<F>(state: AppState, m: Mutation, f: F) -> Response
where
    F: FnOnce(&Store, Option<u64>) -> ApiResult<(StatusCode, Value)> + Send + 'static,
{
    let mut tokens = state.tokens.lock().await;
    if let Some(hit) = tokens.get(&m.key) {
        let mut response = json_response(hit.status, hit.body.clone());
        response
            .headers_mut()
            .insert(REPLAYED_HEADER, HeaderValue::from_static("true"));
        return response;
    }
    let store = state.store.clone();
    let expected = m.expected;
    match blocking(move || f(&store, expected)).await {
        Ok((status, value)) => {
            let body = Bytes::from(serde_json::to_vec(&value).expect("json serializes"));
            tokens.insert(m.key.clone(), StoredResponse { status, body: body.clone() });
            tracing::info!(request = %m.key, %status, "mutation");
            json_response(status, body)
        }
        Err(e) => e.into_response(),
    }
}

fn apply(store: &Store, id: &str, edit: &Edit, expected: Option<u64>) -> ApiResult<Value> {
    let change = store.apply(id, edit, expected)?;
    Ok(change_json(&change))
}

pub async fn list_projects(State(state): State<AppState>) -> ApiResult<Json<Value>> {
    let projects = blocking(move || Ok(state.store.list_projects()?)).await?;
    Ok(Json(json!({ "projects": projects })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateProject {
    name: String,
    #[serde(default)]
    source_meta: Option<DocumentMeta>,
    #[serde(default)]
    target_meta: Option<DocumentMeta>,
    #[serde(default)]
    source_language: Option<String>,
    #[serde(default)]
    target_language: Option<String>,
}

fn meta_for(meta: Option<DocumentMeta>, language: Option<String>, default: &str) -> DocumentMeta {
    let mut meta = meta.unwrap_or_default();
    if let Some(lang) = language {
        meta.language = lang;
    }
    if meta.language.is_empty() {
        meta.language = default.to_string();
    }
    meta
}

pub async fn create_project(State(state): State<AppState>, m: Mutation, body: Bytes) -> Response {
    let req: CreateProject = match parse_body(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    run(state, m, move |store, _| {
        let project = store.create_project(
            &req.name,
            meta_for(req.source_meta, req.source_language, "und"),
            meta_for(req.target_meta, req.target_language, "und"),
        )?;
        Ok((
            StatusCode::CREATED,
            json!({ "project_id": project.project_id, "revision": 0, "project": project }),
        ))
    })
    .await
}

pub async fn get_project(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let (project, revision, history) = blocking(move || {
        let id = state.store.resolve(&id)?;
        Ok(state.store.snapshot(&id)?)
    })
    .await?;
    let mut v = history_json(history);
    v["project"] = json!(project);
    v["revision"] = json!(revision);
    Ok(Json(v))
}

pub async fn delete_project(State(state): State<AppState>, Path(id): Path<String>, m: Mutation) -> Response {
    run(state, m, move |store, expected| {
        let id = store.resolve(&id)?;
        check_expected(store, &id, expected)?;
        store.delete_project(&id)?;
        Ok((StatusCode::OK, json!({ "deleted": id })))
    })
    .await
}

fn check_expected(store: &Store, id: &str, expected: Option<u64>) -> ApiResult<()> {
    if let Some(expected) = expected {
        let actual = store.revision(id)?;
        if actual != expected {
            return Err(lata_store::StoreError::StaleRevision { expected, actual }.into());
        }
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PutDocument {
    text: String,
    #[serde(default)]
    meta: Option<DocumentMeta>,
    #[serde(default)]
    replace: bool,
}

pub async fn put_document(
    State(state): State<AppState>,
    Path((id, role)): Path<(String, String)>,
    m: Mutation,
    body: Bytes,
) -> Response {
    let parsed = parse_role(&role).and_then(|role| Ok((role, parse_body::<PutDocument>(&body)?)));
    let (role, req) = match parsed {
        Ok(x) => x,
        Err(e) => return e.into_response(),
    };
    run(state, m, move |store, expected| {
        let id = store.resolve(&id)?;
        check_expected(store, &id, expected)?;
        let revision = store.import_document_with_meta(&id, role, &req.text, req.meta.as_ref(), req.replace)?;
        let (project, _, history) = store.snapshot(&id)?;
        let mut v = history_json(history);
        v["revision"] = json!(revision);
        v["paragraphs"] = json!(project.document(role).paragraphs.len());
        Ok((StatusCode::OK, v))
    })
    .await
}

pub async fn put_metadata(
    State(state): State<AppState>,
    Path((id, role)): Path<(String, String)>,
    m: Mutation,
    body: Bytes,
) -> Response {
    let parsed = parse_role(&role).and_then(|role| Ok((role, parse_body::<DocumentMeta>(&body)?)));
    let (role, meta) = match parsed {
        Ok(x) => x,
        Err(e) => return e.into_response(),
    };
    run(state, m, move |store, expected| {
        let id = store.resolve(&id)?;
        Ok((StatusCode::OK, apply(store, &id, &Edit::SetMetadata { role, meta }, expected)?))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewLink {
    level: Level,
    #[serde(default)]
    source_ids: BTreeSet<SegmentId>,
    #[serde(default)]
    target_ids: BTreeSet<SegmentId>,
    #[serde(default)]
    comment: String,
    #[serde(default)]
    techniques: BTreeSet<String>,
    #[serde(default)]
    origin: Option<Origin>,
    #[serde(default)]
    confidence: Option<f64>,
}

pub async fn create_link(State(state): State<AppState>, Path(id): Path<String>, m: Mutation, body: Bytes) -> Response {
    let req: NewLink = match parse_body(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    run(state, m, move |store, expected| {
        let id = store.resolve(&id)?;
        let mut link = AlignmentLink::new(req.level, req.source_ids, req.target_ids)
            .with_origin(req.origin.unwrap_or(Origin::Manual));
        link.comment = req.comment;
        link.techniques = req.techniques;
        link.confidence = req.confidence;
        let mut v = apply(store, &id, &Edit::AddLinks { links: vec![link.clone()] }, expected)?;
        v["link"] = json!(link);
        Ok((StatusCode::CREATED, v))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchLink {
    #[serde(default)]
    techniques: Option<BTreeSet<String>>,
    #[serde(default)]
    comment: Option<String>,
    #[serde(default)]
    source_ids: Option<BTreeSet<SegmentId>>,
    #[serde(default)]
    target_ids: Option<BTreeSet<SegmentId>>,
}

fn patch_in(store: &Store, id: &str, link_id: &str, req: PatchLink, expected: Option<u64>) -> ApiResult<Value> {
    let (project, _) = store.load(id)?;
    let mut link = project
        .link(link_id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown-link", format!("no link `{link_id}`")))?;
    if let Some(t) = req.techniques {
        link.techniques = t;
    }
    if let Some(c) = req.comment {
        link.comment = c;
    }
    if let Some(s) = req.source_ids {
        link.source_ids = s;
    }
    if let Some(t) = req.target_ids {
        link.target_ids = t;
    }
    let mut v = apply(store, id, &Edit::ModifyLink { link: link.clone() }, expected)?;
    v["link"] = json!(link);
    Ok(v)
}

fn delete_in(store: &Store, id: &str, link_id: &str, expected: Option<u64>) -> ApiResult<Value> {
    let edit = Edit::RemoveLinks {
        link_ids: vec![link_id.to_string()],
    };
    apply(store, id, &edit, expected)
}

pub async fn patch_project_link(
    State(state): State<AppState>,
    Path((id, link_id)): Path<(String, String)>,
    m: Mutation,
    body: Bytes,
) -> Response {
    let req: PatchLink = match parse_body(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    run(state, m, move |store, expected| {
        let id = store.resolve(&id)?;
        Ok((StatusCode::OK, patch_in(store, &id, &link_id, req, expected)?))
    })
    .await
}

pub async fn patch_link(State(state): State<AppState>, Path(link_id): Path<String>, m: Mutation, body: Bytes) -> Response {
    let req: PatchLink = match parse_body(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    run(state, m, move |store, expected| {
        let id = store.project_of_link(&link_id)?;
        Ok((StatusCode::OK, patch_in(store, &id, &link_id, req, expected)?))
    })
    .await
}

pub async fn delete_project_link(
    State(state): State<AppState>,
    Path((id, link_id)): Path<(String, String)>,
    m: Mutation,
) -> Response {
    run(state, m, move |store, expected| {
        let id = store.resolve(&id)?;
        Ok((StatusCode::OK, delete_in(store, &id, &link_id, expected)?))
    })
    .await
}

pub async fn delete_link(State(state): State<AppState>, Path(link_id): Path<String>, m: Mutation) -> Response {
    run(state, m, move |store, expected| {
        let id = store.project_of_link(&link_id)?;
        Ok((StatusCode::OK, delete_in(store, &id, &link_id, expected)?))
    })
    .await
}

pub async fn undo(State(state): State<AppState>, Path(id): Path<String>, m: Mutation) -> Response {
    run(state, m, move |store, expected| {
        let id = store.resolve(&id)?;
        Ok((StatusCode::OK, change_json(&store.undo(&id, expected)?)))
    })
    .await
}

pub async fn redo(State(state): State<AppState>, Path(id): Path<String>, m: Mutation) -> Response {
    run(state, m, move |store, expected| {
        let id = store.resolve(&id)?;
        Ok((StatusCode::OK, change_json(&store.redo(&id, expected)?)))
    })
    .await
}

fn paragraph_pair(project: &Project, src: &str, tgt: &str) -> ApiResult<(Paragraph, Paragraph)> {
    let find = |role: Role, text: &str| -> ApiResult<Paragraph> {
        let id = parse_paragraph_id(text)?;
        project.document(role).paragraph(id).cloned().ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown-paragraph",
                format!("{role} document has no paragraph {id}"),
            )
        })
    };
    Ok((find(Role::Source, src)?, find(Role::Target, tgt)?))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SuggestRequest {
    #[serde(default)]
    template_id: Option<String>,
}

fn pick_template(project: &Project, template_id: Option<&str>) -> ApiResult<PromptTemplate> {
    match template_id {
        Some(tid) => project
            .prompt_templates
            .iter()
            .find(|t| t.template_id == tid)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown-template", format!("no template `{tid}`"))),
        None => Ok(project.prompt_templates.first().cloned().unwrap_or_else(default_template)),
    }
}

/// Runs the suggestion pipeline for one paragraph pair; nothing is stored.
pub fn suggest_for(store: &Store, id: &str, src: &str, tgt: &str, template_id: Option<&str>) -> ApiResult<SuggestOutcome> {
    let (project, _) = store.load(id)?;
    let (source, target) = paragraph_pair(&project, src, tgt)?;
    let config = store.config(id)?;
    let fallback = FallbackConfig {
        segmenter: config.segmenter,
        aligner: config.aligner,
    };
    let pair = ParagraphPair {
        source: &source,
        target: &target,
        source_language: &project.source_doc.meta.language,
        target_language: &project.target_doc.meta.language,
    };
    let template = pick_template(&project, template_id)?;
    match store.provider_config()? {
        Some(provider) => Ok(lata_core::llm::suggest(&pair, &template, &provider, Some(store.request_log()), &fallback)?),
        None => Ok(SuggestOutcome::Baseline(FallbackResult {
            reason: FallbackReason::NoProvider,
            last_error: None,
            attempts: 0,
            payload: lata_core::llm::baseline_payload(&pair, &fallback),
        })),
    }
}

pub async fn suggest(
    State(state): State<AppState>,
    Path((id, src, tgt)): Path<(String, String, String)>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let req: SuggestRequest = parse_body(&body)?;
    let outcome = blocking(move || {
        let id = state.store.resolve(&id)?;
        suggest_for(&state.store, &id, &src, &tgt, req.template_id.as_deref())
    })
    .await?;
    Ok(Json(json!(outcome)))
}



#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AcceptRequest {
    payload: SuggestionPayload,
    #[serde(default)]
    origin: Option<Origin>,
}

pub async fn accept(
    State(state): State<AppState>,
    Path((id, src, tgt)): Path<(String, String, String)>,
    m: Mutation,
    body: Bytes,
) -> Response {
    let req: AcceptRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    run(state, m, move |store, expected| {
        let id = store.resolve(&id)?;
        let (project, _) = store.load(&id)?;
        let (source, target) = paragraph_pair(&project, &src, &tgt)?;
        let payload = validate_payload(&req.payload.to_json(), &source, &target).map_err(|f| {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, f.rule.code(), f.to_string())
                .with_details(json!({ "path": f.path }))
        })?;
        let edit = accept_suggestion_edit(
            &project,
            source.id,
            target.id,
            &payload,
            req.origin.unwrap_or(Origin::Llm),
        );
        let mut v = apply(store, &id, &edit, expected)?;
        v["links_added"] = json!(payload.links.len());
        Ok((StatusCode::OK, v))
    })
    .await
}

pub async fn get_techniques(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let (project, revision) = blocking(move || {
        let id = state.store.resolve(&id)?;
        Ok(state.store.load(&id)?)
    })
    .await?;
    Ok(Json(json!({ "techniques": project.taxonomy, "revision": revision })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PutTechniques {
    techniques: Vec<TechniqueDef>,
}

pub async fn put_techniques(State(state): State<AppState>, Path(id): Path<String>, m: Mutation, body: Bytes) -> Response {
    let req: PutTechniques = match parse_body(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    run(state, m, move |store, expected| {
        let id = store.resolve(&id)?;
        let edit = Edit::ReplaceTaxonomy { defs: req.techniques };
        Ok((StatusCode::OK, apply(store, &id, &edit, expected)?))
    })
    .await
}

pub async fn get_templates(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let (project, revision) = blocking(move || {
        let id = state.store.resolve(&id)?;
        Ok(state.store.load(&id)?)
    })
    .await?;
    Ok(Json(json!({ "templates": project.prompt_templates, "revision": revision })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PutTemplates {
    templates: Vec<PromptTemplate>,
}

pub async fn put_templates(State(state): State<AppState>, Path(id): Path<String>, m: Mutation, body: Bytes) -> Response {
    let req: PutTemplates = match parse_body(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    run(state, m, move |store, expected| {
        let id = store.resolve(&id)?;
        for t in &req.templates {
            t.check()?;
        }
        let edit = Edit::ReplaceTemplates { templates: req.templates };
        Ok((StatusCode::OK, apply(store, &id, &edit, expected)?))
    })
    .await
}

pub async fn export(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let (name, bytes) = blocking(move || {
        let id = state.store.resolve(&id)?;
        let (project, _) = state.store.load(&id)?;
        Ok((project.name.clone(), state.store.export_bundle(&id)?))
    })
    .await?;
    let disposition = format!("attachment; filename=\"{}.zip\"", lata_core::ces::slug(&name));
    let mut response = Response::new(Body::from(bytes));
    let headers = response.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/zip"));
    if let Ok(v) = HeaderValue::from_str(&disposition) {
        headers.insert(header::CONTENT_DISPOSITION, v);
    }
    Ok(response)
}

pub async fn validate(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let (project, revision) = blocking(move || {
        let id = state.store.resolve(&id)?;
        Ok(state.store.load(&id)?)
    })
    .await?;
    let violations = validate_project(&project);
    Ok(Json(json!({
        "valid": violations.is_empty(),
        "violations": violations,
        "revision": revision,
    })))
}
