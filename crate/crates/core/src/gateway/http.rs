//! OpenAI-compatible chat-completion client.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{GatewayError, ModelBackend, ModelRequest};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpConfig {
    /// Full URL of the chat-completions route.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token; no header when unset.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    60
}

pub struct HttpBackend {
    id: String,
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend").field("id", &self.id).finish()
    }
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, GatewayError> {
        let id = format!("http:{}", config.model);
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| GatewayError::Transport {
                backend: id.clone(),
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(Self { id, config, client })
    }

    pub fn request_body(&self, request: &ModelRequest) -> Value {
        let mut messages = Vec::with_capacity(2);
        if !request.system_instruction.is_empty() {
            messages.push(json!({"role": "system", "content": request.system_instruction}));
        }
        messages.push(json!({"role": "user", "content": request.user_content}));
        json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output,
        })
    }

    fn malformed(&self, message: impl Into<String>) -> GatewayError {
        GatewayError::Malformed {
            backend: self.id.clone(),
            message: message.into(),
        }
    }
}

impl ModelBackend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &ModelRequest) -> Result<String, GatewayError> {
        let mut call = self.client.post(&self.config.endpoint).json(&self.request_body(request));
        if let Some(var) = &self.config.api_key_env {
            if let Ok(key) = std::env::var(var) {
                call = call.bearer_auth(key);
            }
        }
        let response = call.send().map_err(|e| {
            if e.is_timeout() {
                GatewayError::Timeout {
                    backend: self.id.clone(),
                    attempts: 1,
                }
            } else {
                GatewayError::Transport {
                    backend: self.id.clone(),
                    attempts: 1,
                    message: e.to_string(),
                }
            }
        })?;
        let status = response.status();
        let body = response.text().map_err(|e| GatewayError::Transport {
            backend: self.id.clone(),
            attempts: 1,
            message: e.to_string(),
        })?;
        if !status.is_success() {
            return Err(GatewayError::Status {
                backend: self.id.clone(),
                status: status.as_u16(),
                attempts: 1,
                body,
            });
        }
        let doc: Value = serde_json::from_str(&body).map_err(|e| self.malformed(e.to_string()))?;
        doc.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| self.malformed("missing choices[0].message.content"))
    }
}
