//! HTTP model backends.
//!
//! Chat speaks the de-facto chat-completions schema: `POST
//! {base}/v1/chat/completions` with `{"model", "messages", "temperature"}`,
//! reading `choices[0].message.content`. Vision endpoints are a minimal
//! protocol of our own since no standard exists: `POST {base}/vqa` with
//! `{"image_b64", "question"}` returning `{"answer"}`, and `POST
//! {base}/caption` with `{"image_b64"}` returning `{"caption"}`.
//!
//! Transport errors, HTTP 429 and 5xx responses retry with exponential
//! backoff; other statuses and malformed bodies fail immediately.

use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use crate::perception::DirectionalCell;

use super::{
    BackendError, BackendReply, BackendResult, CaptionBackend, ChatBackend, ChatMessage,
    FixtureKey, VqaBackend,
};

/// Environment variable naming the chat server base URL.
pub const ENV_CHAT_URL: &str = "TINA_CHAT_URL";
/// Environment variable holding the chat bearer token, if any.
pub const ENV_CHAT_KEY: &str = "TINA_CHAT_KEY";
/// Environment variable naming the vision (VQA + caption) server base URL.
pub const ENV_VQA_URL: &str = "TINA_VQA_URL";

#[derive(Debug, Clone)]
pub struct HttpChatConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    /// Total attempts, first call included.
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub timeout: Duration,
}

impl HttpChatConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        HttpChatConfig {
            base_url: base_url.into(),
            api_key: None,
            model: "gpt-4".to_string(),
            max_attempts: 4,
            backoff_base_ms: 250,
            timeout: Duration::from_secs(60),
        }
    }

    pub fn from_env() -> Result<Self, BackendError> {
        let base_url = std::env::var(ENV_CHAT_URL)
            .map_err(|_| BackendError::failure(format!("{ENV_CHAT_URL} is not set")))?;
        let mut cfg = HttpChatConfig::new(base_url);
        cfg.api_key = std::env::var(ENV_CHAT_KEY).ok();
        Ok(cfg)
    }
}

pub struct HttpChat {
    cfg: HttpChatConfig,
    agent: ureq::Agent,
}

fn make_agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::new_with_config(
        ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build(),
    )
}

impl HttpChat {
    pub fn new(cfg: HttpChatConfig) -> Self {
        let agent = make_agent(cfg.timeout);
        HttpChat { cfg, agent }
    }
}

fn retryable_status(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

/// POST a JSON body with retry/backoff; returns the parsed body and the
/// attempt count that succeeded.
fn post_with_retries(
    agent: &ureq::Agent,
    url: &str,
    headers: &[(&str, String)],
    body: &Value,
    max_attempts: u32,
    backoff_base_ms: u64,
) -> Result<(Value, u32), BackendError> {
    let mut attempt = 0u32;
    loop {
        attempt += 1;
        let mut req = agent.post(url);
        for (name, value) in headers {
            req = req.header(*name, value.as_str());
        }
        let outcome = req.send_json(body);
        match outcome {
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                if (200..300).contains(&status) {
                    let parsed: Value =
                        resp.body_mut()
                            .read_json()
                            .map_err(|e| BackendError::Failure {
                                status: Some(status),
                                attempts: attempt,
                                message: format!("malformed response body: {e}"),
                            })?;
                    return Ok((parsed, attempt));
                }
                if !retryable_status(status) || attempt >= max_attempts {
                    return Err(BackendError::Failure {
                        status: Some(status),
                        attempts: attempt,
                        message: format!("server returned status {status}"),
                    });
                }
                log::debug!("retryable status {status} from {url}, attempt {attempt}");
            }
            Err(e) => {
                if attempt >= max_attempts {
                    return Err(BackendError::Failure {
                        status: None,
                        attempts: attempt,
                        message: format!("transport error: {e}"),
                    });
                }
                log::debug!("transport error from {url}, attempt {attempt}: {e}");
            }
        }
        let delay = backoff_base_ms.saturating_mul(1u64 << (attempt - 1).min(6));
        std::thread::sleep(Duration::from_millis(delay));
    }
}

impl ChatBackend for HttpChat {
    fn chat(&self, _key: &FixtureKey, messages: &[ChatMessage], temperature: f64) -> BackendResult {
        let url = format!(
            "{}/v1/chat/completions",
            self.cfg.base_url.trim_end_matches('/')
        );
        let body = json!({
            "model": self.cfg.model,
            "messages": messages,
            "temperature": temperature,
        });
        let mut headers: Vec<(&str, String)> = Vec::new();
        if let Some(key) = &self.cfg.api_key {
            headers.push(("authorization", format!("Bearer {key}")));
        }
        let (parsed, attempts) = post_with_retries(
            &self.agent,
            &url,
            &headers,
            &body,
            self.cfg.max_attempts,
            self.cfg.backoff_base_ms,
        )?;
        let content = parsed
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::Failure {
                status: None,
                attempts,
                message: "malformed completion body: missing choices[0].message.content".into(),
            })?;
        Ok(BackendReply {
            text: content.to_string(),
            attempts,
        })
    }
}

#[derive(Debug, Clone)]
pub struct HttpVisionConfig {
    pub base_url: String,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub timeout: Duration,
}

impl HttpVisionConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        HttpVisionConfig {
            base_url: base_url.into(),
            max_attempts: 4,
            backoff_base_ms: 250,
            timeout: Duration::from_secs(60),
        }
    }

    pub fn from_env() -> Result<Self, BackendError> {
        let base_url = std::env::var(ENV_VQA_URL)
            .map_err(|_| BackendError::failure(format!("{ENV_VQA_URL} is not set")))?;
        Ok(HttpVisionConfig::new(base_url))
    }
}

/// VQA and captioning against one vision model server.
pub struct HttpVision {
    cfg: HttpVisionConfig,
    agent: ureq::Agent,
}

impl HttpVision {
    pub fn new(cfg: HttpVisionConfig) -> Self {
        let agent = make_agent(cfg.timeout);
        HttpVision { cfg, agent }
    }

    fn image_b64(image_ref: &str) -> Result<String, BackendError> {
        let bytes = std::fs::read(image_ref)
            .map_err(|e| BackendError::failure(format!("cannot read image `{image_ref}`: {e}")))?;
        Ok(base64::engine::general_purpose::STANDARD.encode(bytes))
    }

    fn post(&self, path: &str, body: &Value) -> Result<(Value, u32), BackendError> {
        let url = format!("{}{path}", self.cfg.base_url.trim_end_matches('/'));
        post_with_retries(
            &self.agent,
            &url,
            &[],
            body,
            self.cfg.max_attempts,
            self.cfg.backoff_base_ms,
        )
    }
}

impl VqaBackend for HttpVision {
    fn answer(&self, _key: &FixtureKey, cell: &DirectionalCell, question: &str) -> BackendResult {
        let image_ref = cell
            .image_ref
            .as_deref()
            .ok_or_else(|| BackendError::failure("cell has no image_ref; HTTP VQA needs one"))?;
        let body = json!({
            "image_b64": Self::image_b64(image_ref)?,
            "question": question,
        });
        let (parsed, attempts) = self.post("/vqa", &body)?;
        let answer = parsed
            .get("answer")
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::Failure {
                status: None,
                attempts,
                message: "malformed VQA body: missing `answer`".into(),
            })?;
        Ok(BackendReply {
            text: answer.to_string(),
            attempts,
        })
    }
}

impl CaptionBackend for HttpVision {
    fn caption(&self, _key: &FixtureKey, image_ref: &str) -> BackendResult {
        let body = json!({ "image_b64": Self::image_b64(image_ref)? });
        let (parsed, attempts) = self.post("/caption", &body)?;
        let caption = parsed
            .get("caption")
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::Failure {
                status: None,
                attempts,
                message: "malformed caption body: missing `caption`".into(),
            })?;
        Ok(BackendReply {
            text: caption.to_string(),
            attempts,
        })
    }
}
