use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use lata_core::llm::TemplateError;
use lata_store::StoreError;
use serde_json::{json, Value};

/// Error body `{"error": {"code", "message", "details"}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
            details: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid-request", message)
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn body(&self) -> Value {
        json!({
            "error": {
                "code": self.code,
                "message": self.message,
                "details": self.details,
            }
        })
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::AmbiguousName(_)
            | StoreError::StaleRevision { .. }
            | StoreError::EmptyUndo
            | StoreError::EmptyRedo
            | StoreError::DocumentExists(_) => StatusCode::CONFLICT,
            StoreError::Rejected(_) | StoreError::Edit(_) | StoreError::InvalidConfig(_) | StoreError::Bundle(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            StoreError::Storage(_) | StoreError::Corrupt(_) | StoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let details = match &e {
            StoreError::StaleRevision { expected, actual } => Some(json!({ "expected": expected, "actual": actual })),
            _ if !e.violations().is_empty() => Some(json!({ "violations": e.violations() })),
            _ => None,
        };
        ApiError {
            status,
            code: e.code().to_string(),
            message: e.to_string(),
            details,
        }
    }
}

impl From<TemplateError> for ApiError {
    fn from(e: TemplateError) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}
