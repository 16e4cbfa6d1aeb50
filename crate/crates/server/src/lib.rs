//! Local HTTP/JSON API over the project store.
//!
//! Mutating routes require an `X-Request-Token` header; a repeated token
//! replays the first successful response instead of applying the change
//! again. An optional `X-Expected-Revision` header makes the write fail with
//! 409 `stale-revision` when the project has moved on.

mod error;
mod idempotency;
mod routes;

use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use axum::routing::{get, post, put};
use axum::Router;
use lata_store::Store;
use tokio::sync::Mutex;
use tower_http::services::ServeDir;

pub use error::ApiError;
use idempotency::TokenCache;

pub const DEFAULT_PORT: u16 = 7341;
pub const REQUEST_TOKEN_HEADER: &str = "x-request-token";
pub const EXPECTED_REVISION_HEADER: &str = "x-expected-revision";
pub const REPLAYED_HEADER: &str = "x-idempotent-replay";

const INDEX_HTML: &str = include_str!("index.html");

#[derive(Clone)]
pub struct AppState {
    store: Arc<Store>,
    tokens: Arc<Mutex<TokenCache>>,
}

impl AppState {
    pub fn new(store: Arc<Store>) -> Self {
        AppState {
            store,
            tokens: Arc::new(Mutex::new(TokenCache::default())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub addr: SocketAddr,
    /// Built editor bundle served at `/`; a placeholder page when unset.
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            addr: SocketAddr::from((Ipv4Addr::LOCALHOST, DEFAULT_PORT)),
            ui_dir: None,
        }
    }
}

pub fn router(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/projects", get(routes::list_projects).post(routes::create_project))
        .route("/projects/{id}", get(routes::get_project).delete(routes::delete_project))
        .route("/projects/{id}/documents/{role}", put(routes::put_document))
        .route("/projects/{id}/metadata/{role}", put(routes::put_metadata))
        .route("/projects/{id}/links", post(routes::create_link))
        .route(
            "/projects/{id}/links/{link_id}",
            axum::routing::patch(routes::patch_project_link).delete(routes::delete_project_link),
        )
        .route(
            "/links/{link_id}",
            axum::routing::patch(routes::patch_link).delete(routes::delete_link),
        )
        .route("/projects/{id}/undo", post(routes::undo))
        .route("/projects/{id}/redo", post(routes::redo))
        .route("/projects/{id}/paragraph-pairs/{src}/{tgt}/suggest", post(routes::suggest))
        .route("/projects/{id}/paragraph-pairs/{src}/{tgt}/accept", post(routes::accept))
        .route("/projects/{id}/techniques", get(routes::get_techniques).put(routes::put_techniques))
        .route("/projects/{id}/templates", get(routes::get_templates).put(routes::put_templates))
        .route("/projects/{id}/export", post(routes::export))
        .route("/projects/{id}/validate", get(routes::validate))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { axum::response::Html(INDEX_HTML) })),
    }
}

/// Serves until ctrl-c.
pub async fn serve(store: Arc<Store>, config: ServerConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(AppState::new(store), config.ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
