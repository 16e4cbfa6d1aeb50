use lata_core::ces::CesError;
use lata_store::StoreError;
use serde_json::{json, Value};

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;

/// A failed command: stable code, message and process exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: String,
    pub message: String,
    pub details: Option<Value>,
    pub exit: u8,
}

impl Failure {
    pub fn new(code: &str, message: impl Into<String>, exit: u8) -> Self {
        Failure {
            code: code.to_string(),
            message: message.into(),
            details: None,
            exit,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Failure::new("usage", message, EXIT_USAGE)
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Failure::new("io-error", format!("{}: {e}", path.display()), EXIT_IO)
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": { "code": self.code, "message": self.message, "details": self.details } })
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        let exit = match &e {
            StoreError::NotFound(_) | StoreError::AmbiguousName(_) => EXIT_USAGE,
            StoreError::Storage(_) | StoreError::Corrupt(_) | StoreError::Io(_) => EXIT_IO,
            StoreError::Bundle(CesError::Io(_)) => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        let details = (!e.violations().is_empty()).then(|| json!({ "violations": e.violations() }));
        Failure {
            code: e.code().to_string(),
            message: e.to_string(),
            details,
            exit,
        }
    }
}

impl From<CesError> for Failure {
    fn from(e: CesError) -> Self {
        let exit = if matches!(e, CesError::Io(_)) { EXIT_IO } else { EXIT_VALIDATION };
        let details = match &e {
            CesError::Invalid(v) => Some(json!({ "violations": v })),
            _ => None,
        };
        Failure {
            code: e.code().to_string(),
            message: e.to_string(),
            details,
            exit,
        }
    }
}
