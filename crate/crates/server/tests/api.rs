use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use lata_server::{router, AppState};
use lata_store::Store;
use serde_json::{json, Value};
use tower::ServiceExt;

static TOKENS: AtomicU64 = AtomicU64::new(0);

struct Api {
    app: Router,
    _dir: tempfile::TempDir,
}

struct Reply {
    status: StatusCode,
    body: Value,
    replayed: bool,
    bytes: Vec<u8>,
}

impl Api {
    fn new() -> Api {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(Store::open(dir.path()).unwrap());
        Api {
            app: router(AppState::new(store), None),
            _dir: dir,
        }
    }

    async fn send(&self, method: &str, uri: &str, body: Option<Value>, headers: &[(&str, String)]) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        for (k, v) in headers {
            req = req.header(*k, v);
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string()))
                .unwrap(),
            None => req.body(Body::empty()).unwrap(),
        };
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let replayed = resp.headers().contains_key("x-idempotent-replay");
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        let body = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
        Reply {
            status,
            body,
            replayed,
            bytes,
        }
    }

    async fn get(&self, uri: &str) -> Reply {
        self.send("GET", uri, None, &[]).await
    }

    /// A mutation with a fresh request token.
    async fn mutate(&self, method: &str, uri: &str, body: Option<Value>) -> Reply {
        let token = format!("t{}", TOKENS.fetch_add(1, Ordering::Relaxed));
        self.send(method, uri, body, &[("x-request-token", token)]).await
    }

    async fn project(&self) -> String {
        let r = self
            .mutate(
                "POST",
                "/projects",
                Some(json!({"name": "demo", "source_language": "en", "target_language": "ar"})),
            )
            .await;
        assert_eq!(r.status, StatusCode::CREATED);
        let id = r.body["project_id"].as_str().unwrap().to_string();
        let r = self
            .mutate(
                "PUT",
                &format!("/projects/{id}/documents/source"),
                Some(json!({"text": "The ship sailed north. Rain fell.\n\nDr. Lee waved."})),
            )
            .await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.body);
        let r = self
            .mutate(
                "PUT",
                &format!("/projects/{id}/documents/target"),
                Some(json!({"text": "أبحرت السفينة شمالا. هطل المطر.\n\nلوّح لي."})),
            )
            .await;
        assert_eq!(r.status, StatusCode::OK);
        id
    }
}

#[tokio::test]
async fn create_and_list() {
    let api = Api::new();
    let id = api.project().await;
    let r = api.get("/projects").await;
    assert_eq!(r.body["projects"][0]["project_id"], json!(id));
    let r = api.get(&format!("/projects/{id}")).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["revision"], json!(2));
    assert_eq!(r.body["can_undo"], json!(false));
    assert_eq!(r.body["project"]["source_doc"]["paragraphs"].as_array().unwrap().len(), 2);
    assert_eq!(api.get("/projects/nope").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn mutations_need_a_token() {
    let api = Api::new();
    let r = api.send("POST", "/projects", Some(json!({"name": "x"})), &[]).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.body["error"]["code"], json!("missing-request-token"));
}

#[tokio::test]
async fn link_lifecycle_and_undo() {
    let api = Api::new();
    let id = api.project().await;
    let r = api
        .mutate(
            "POST",
            &format!("/projects/{id}/links"),
            Some(json!({"level": "paragraph", "source_ids": ["p1"], "target_ids": ["p1", "p2"]})),
        )
        .await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
    assert_eq!(r.body["revision"], json!(3));
    let link_id = r.body["link"]["link_id"].as_str().unwrap().to_string();

    let r = api
        .mutate(
            "PUT",
            &format!("/projects/{id}/techniques"),
            Some(json!({"techniques": [{"name": "Inversion", "description": "word order", "examples": []}]})),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK);

    let r = api
        .mutate(
            "PATCH",
            &format!("/links/{link_id}"),
            Some(json!({"techniques": ["Inversion"], "comment": "verb fronting"})),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.body["link"]["comment"], json!("verb fronting"));

    let r = api
        .mutate("PATCH", &format!("/links/{link_id}"), Some(json!({"techniques": ["Nope"]})))
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.body["error"]["code"], json!("unknown-technique"));

    let r = api.get(&format!("/projects/{id}/techniques")).await;
    assert_eq!(r.body["techniques"][0]["name"], json!("Inversion"));

    let r = api.mutate("POST", &format!("/projects/{id}/export"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    let members = lata_core::ces::read_members(&r.bytes).unwrap();
    assert!(members[2].contains(r#"techniques="Inversion" comment="verb fronting""#), "{}", members[2]);

    let r = api.mutate("DELETE", &format!("/projects/{id}/links/{link_id}"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    let r = api.mutate("POST", &format!("/projects/{id}/undo"), None).await;
    assert_eq!(r.body["kind"], json!("remove_link"));
    assert_eq!(r.body["can_redo"], json!(true));
    let r = api.get(&format!("/projects/{id}")).await;
    assert_eq!(r.body["project"]["links"][0]["comment"], json!("verb fronting"));

    for _ in 0..3 {
        api.mutate("POST", &format!("/projects/{id}/undo"), None).await;
    }
    let r = api.mutate("POST", &format!("/projects/{id}/undo"), None).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.body["error"]["code"], json!("empty-undo-stack"));
}

#[tokio::test]
async fn stale_revision_is_rejected() {
    let api = Api::new();
    let id = api.project().await;
    let body = json!({"level": "paragraph", "source_ids": ["p1"], "target_ids": ["p1"]});
    let r = api
        .send(
            "POST",
            &format!("/projects/{id}/links"),
            Some(body.clone()),
            &[("x-request-token", "a".into()), ("x-expected-revision", "1".into())],
        )
        .await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.body["error"]["code"], json!("stale-revision"));
    assert_eq!(r.body["error"]["details"]["actual"], json!(2));
    let r = api
        .send(
            "POST",
            &format!("/projects/{id}/links"),
            Some(body),
            &[("x-request-token", "a".into()), ("x-expected-revision", "2".into())],
        )
        .await;
    assert_eq!(r.status, StatusCode::CREATED);
}

#[tokio::test]
async fn repeated_token_applies_once() {
    let api = Api::new();
    let id = api.project().await;
    let body = json!({"level": "paragraph", "source_ids": ["p2"], "target_ids": ["p2"]});
    let headers = [("x-request-token", "same".to_string())];
    let first = api.send("POST", &format!("/projects/{id}/links"), Some(body.clone()), &headers).await;
    let second = api.send("POST", &format!("/projects/{id}/links"), Some(body), &headers).await;
    assert_eq!(first.status, StatusCode::CREATED);
    assert_eq!(second.status, StatusCode::CREATED);
    assert!(!first.replayed);
    assert!(second.replayed);
    assert_eq!(first.bytes, second.bytes);
    let r = api.get(&format!("/projects/{id}")).await;
    assert_eq!(r.body["project"]["links"].as_array().unwrap().len(), 1);
    assert_eq!(r.body["revision"], json!(3));
}

#[tokio::test]
async fn suggest_and_accept_is_one_command() {
    let api = Api::new();
    let id = api.project().await;
    let r = api
        .send("POST", &format!("/projects/{id}/paragraph-pairs/p1/p1/suggest"), None, &[])
        .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.body["origin"], json!("baseline"));
    assert_eq!(r.body["reason"], json!("no-provider"));
    let payload = r.body["payload"].clone();
    assert_eq!(payload["links"].as_array().unwrap().len(), 2);

    let r = api
        .mutate(
            "POST",
            &format!("/projects/{id}/paragraph-pairs/p1/p1/accept"),
            Some(json!({"payload": payload, "origin": "baseline"})),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.body["history"]["undo"], json!(1));
    let r = api.get(&format!("/projects/{id}")).await;
    assert_eq!(r.body["project"]["links"].as_array().unwrap().len(), 2);
    assert_eq!(r.body["project"]["source_doc"]["paragraphs"][0]["sentences"].as_array().unwrap().len(), 2);

    api.mutate("POST", &format!("/projects/{id}/undo"), None).await;
    let r = api.get(&format!("/projects/{id}")).await;
    assert!(r.body["project"]["links"].as_array().unwrap().is_empty());
    assert!(r.body["project"]["source_doc"]["paragraphs"][0]["sentences"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn bad_payload_is_rejected_with_rule() {
    let api = Api::new();
    let id = api.project().await;
    let payload = json!({
        "source_sentences": [{"id": "p1-s1", "text": "The ship sailed north."}],
        "target_sentences": [{"id": "p1-s1", "text": "أبحرت السفينة شمالا. هطل المطر."}],
        "links": []
    });
    let r = api
        .mutate(
            "POST",
            &format!("/projects/{id}/paragraph-pairs/p1/p1/accept"),
            Some(json!({"payload": payload})),
        )
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.body["error"]["code"], json!("coverage"));
    let r = api
        .send("POST", &format!("/projects/{id}/paragraph-pairs/p9/p1/suggest"), None, &[])
        .await;
    assert_eq!(r.body["error"]["code"], json!("unknown-paragraph"));
}

#[tokio::test]
async fn templates_metadata_validate() {
    let api = Api::new();
    let id = api.project().await;
    let r = api
        .mutate(
            "PUT",
            &format!("/projects/{id}/templates"),
            Some(json!({"templates": [{"template_id": "t1", "name": "x", "body": "{{language}} {{paragraph}}"}]})),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    let r = api
        .mutate(
            "PUT",
            &format!("/projects/{id}/templates"),
            Some(json!({"templates": [{"template_id": "t1", "name": "x", "body": "{{ bad"}]})),
        )
        .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.body["error"]["code"], json!("malformed-placeholder"));
    assert_eq!(api.get(&format!("/projects/{id}/templates")).await.body["templates"][0]["template_id"], json!("t1"));

    let r = api
        .mutate(
            "PUT",
            &format!("/projects/{id}/metadata/target"),
            Some(json!({"language": "ar", "publisher": "Dar", "domain": "fiction"})),
        )
        .await;
    assert_eq!(r.status, StatusCode::OK);
    let r = api
        .mutate("PUT", &format!("/projects/{id}/metadata/target"), Some(json!({"language": "??"})))
        .await;
    assert_eq!(r.body["error"]["code"], json!("invalid-language"));
    let r = api.get(&format!("/projects/{id}/validate")).await;
    assert_eq!(r.body["valid"], json!(true));
    let r = api.mutate("PUT", &format!("/projects/{id}/metadata/middle"), Some(json!({}))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn index_page_is_served() {
    let api = Api::new();
    let r = api.get("/").await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(String::from_utf8(r.bytes).unwrap().contains("/projects"));
}
