//! Provider-agnostic chat-completion client.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

fn default_timeout() -> u64 {
    60
}

fn default_retries() -> u32 {
    2
}

/// Where and how to reach the model. The API key itself lives only in the
/// environment variable named by `api_key_env_var`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmProviderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// Empty for endpoints that need no key.
    #[serde(default)]
    pub api_key_env_var: String,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("endpoint_url `{0}` is not an absolute URL")]
    RelativeEndpoint(String),
    #[error("timeout_seconds must be positive")]
    ZeroTimeout,
}

impl LlmProviderConfig {
    pub fn check(&self) -> Result<(), ConfigError> {
        match url::Url::parse(&self.endpoint_url) {
            Ok(u) if !u.cannot_be_a_base() => {}
            _ => return Err(ConfigError::RelativeEndpoint(self.endpoint_url.clone())),
        }
        if self.timeout_seconds == 0 {
            return Err(ConfigError::ZeroTimeout);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider unreachable: {0}")]
    Unreachable(String),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected provider response: {0}")]
    BadResponse(String),
    #[error("environment variable `{0}` holding the API key is not set")]
    MissingCredentials(String),
}

/// Something that turns a prompt into response text.
pub trait LlmProvider {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;
}

impl<F> LlmProvider for F
where
    F: Fn(&str) -> Result<String, ProviderError>,
{
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        self(prompt)
    }
}

/// Appends request/response records to a text log. Secrets never reach it.
#[derive(Debug, Clone)]
pub struct RequestLog {
    path: PathBuf,
}

impl RequestLog {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        RequestLog { path: path.into() }
    }

    pub fn record(&self, event: &str, detail: Value) {
        let line = json!({
            "ts": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            "event": event,
            "detail": detail,
        });
        // logging is best effort
        if let Ok(mut f) = OpenOptions::new().create(true).append(true).open(&self.path) {
            let _ = writeln!(f, "{line}");
        }
    }
}

/// Minimal chat-completion client: one user message, temperature 0, text of
/// the first choice returned.
pub struct HttpProvider {
    config: LlmProviderConfig,
    agent: ureq::Agent,
    log: Option<RequestLog>,
}

impl HttpProvider {
    pub fn new(config: LlmProviderConfig) -> Self {
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_seconds.max(1))))
            .http_status_as_error(false)
            .build();
        HttpProvider {
            agent: ureq::Agent::new_with_config(agent_config),
            config,
            log: None,
        }
    }

    pub fn with_log(mut self, log: RequestLog) -> Self {
        self.log = Some(log);
        self
    }

    pub fn config(&self) -> &LlmProviderConfig {
        &self.config
    }

    fn api_key(&self) -> Result<Option<String>, ProviderError> {
        if self.config.api_key_env_var.is_empty() {
            return Ok(None);
        }
        std::env::var(&self.config.api_key_env_var)
            .map(Some)
            .map_err(|_| ProviderError::MissingCredentials(self.config.api_key_env_var.clone()))
    }

    fn log(&self, event: &str, detail: Value) {
        if let Some(log) = &self.log {
            log.record(event, detail);
        }
    }
}

/// Extracts `choices[0].message.content` (or `choices[0].text`).
pub fn first_choice_text(response: &Value) -> Option<&str> {
    let choice = response.get("choices")?.get(0)?;
    choice
        .get("message")
        .and_then(|m| m.get("content"))
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
}

impl LlmProvider for HttpProvider {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let key = self.api_key()?;
        let body = json!({
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        });
        self.log(
            "llm-request",
            json!({
                "endpoint": self.config.endpoint_url,
                "authorization": if key.is_some() { "Bearer [REDACTED]" } else { "none" },
                "body": body,
            }),
        );
        let mut request = self.agent.post(&self.config.endpoint_url);
        if let Some(key) = &key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let result = request.send_json(&body);
        let mut response = match result {
            Ok(r) => r,
            Err(e) => {
                self.log("llm-error", json!({ "error": e.to_string() }));
                return Err(ProviderError::Unreachable(e.to_string()));
            }
        };
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Unreachable(e.to_string()))?;
        self.log("llm-response", json!({ "status": status, "body": text }));
        if !(200..300).contains(&status) {
            return Err(ProviderError::Status { status, body: text });
        }
        let value: Value =
            serde_json::from_str(&text).map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        first_choice_text(&value)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::BadResponse("no choices[0] text".into()))
    }
}
