//! Chat-completion client (OpenAI-style wire format).

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ProviderConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response: {0}")]
    Format(String),
}

impl ProviderError {
    /// Transport failures, 408, 429 and 5xx are retried; other statuses are not.
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) | ProviderError::Format(_) => true,
            ProviderError::Status { status, .. } => *status == 408 || *status == 429 || *status >= 500,
        }
    }
}

/// Something that turns a prompt into a completion. Implemented by the HTTP
/// client and by test doubles.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, prompt: &str, idempotency_key: &str) -> Result<String, ProviderError>;
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: [Message<'a>; 1],
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

/// Posts a single user message to `endpoint_url` and returns the first choice.
#[derive(Debug, Clone)]
pub struct HttpChatProvider {
    endpoint: String,
    model: String,
    temperature: f64,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpChatProvider {
    pub fn new(config: &ProviderConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpChatProvider {
            endpoint: config.endpoint_url.clone(),
            model: config.model_name.clone(),
            temperature: config.temperature,
            api_key: config.api_key.clone(),
            agent,
        }
    }
}

impl ChatProvider for HttpChatProvider {
    fn complete(&self, prompt: &str, idempotency_key: &str) -> Result<String, ProviderError> {
        let body = ChatRequest {
            model: &self.model,
            temperature: self.temperature,
            messages: [Message {
                role: "user",
                content: prompt,
            }],
        };
        let mut req = self
            .agent
            .post(&self.endpoint)
            .header("Idempotency-Key", idempotency_key);
        if let Some(k) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(ProviderError::Status { status, body });
        }
        let parsed: ChatResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Format(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::Format("no choices in response".into()))
    }
}
