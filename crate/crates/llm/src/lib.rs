//! Live chat-completions client.
//!
//! Speaks the common `POST {base_url}/chat/completions` wire format and pulls
//! the reply out of a configurable JSON path, so OpenAI-compatible providers
//! work without code changes. Transient failures (timeouts, connection
//! errors, 5xx, 429) are retried with exponential backoff.

use std::time::Duration;

use radsimp_core::chat::{validate_history, BackendError, ChatBackend, ChatMessage, ModelParams};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const API_KEY_ENV: &str = "RADSIMP_API_KEY";
pub const BASE_URL_ENV: &str = "RADSIMP_BASE_URL";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_RESPONSE_PATH: &str = "choices.0.message.content";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_retries: u32,
    #[serde(with = "secs")]
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            initial_backoff: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// Sleep before retry `n` (0-based): initial, 2x, 4x, ...
    pub fn delay(&self, n: u32) -> Duration {
        self.initial_backoff.saturating_mul(1u32 << n.min(16))
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Duration::try_from_secs_f64(f64::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    pub base_url: String,
    /// Dotted path to the reply text; numeric segments index arrays.
    pub response_path: String,
    pub retry: RetryPolicy,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.into(),
            response_path: DEFAULT_RESPONSE_PATH.into(),
            retry: RetryPolicy::default(),
            api_key: None,
        }
    }
}

impl HttpConfig {
    /// Applies the API key and base URL environment variables.
    pub fn with_env(mut self) -> Self {
        if let Ok(url) = std::env::var(BASE_URL_ENV) {
            if !url.trim().is_empty() {
                self.base_url = url;
            }
        }
        self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        self
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

pub struct HttpChatBackend {
    client: reqwest::blocking::Client,
    config: HttpConfig,
}

enum Attempt {
    Done(Result<ChatMessage, BackendError>),
    Retry(BackendError),
}

impl HttpChatBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        if config.response_path.trim().is_empty() {
            return Err(BackendError::InvalidParams("response_path is empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| BackendError::Network {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(Self { client, config })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    pub fn request_body(history: &[ChatMessage], params: &ModelParams) -> Value {
        let mut body = json!({
            "model": params.model_name,
            "messages": history,
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        });
        if let Some(seed) = params.seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn attempt(&self, body: &Value, params: &ModelParams, attempts: u32) -> Attempt {
        let mut req = self
            .client
            .post(self.config.endpoint())
            .timeout(params.request_timeout)
            .json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Attempt::Retry(BackendError::Timeout { attempts }),
            Err(e) => {
                return Attempt::Retry(BackendError::Network {
                    attempts,
                    message: e.to_string(),
                })
            }
        };
        let status = resp.status();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Attempt::Retry(BackendError::Timeout { attempts }),
            Err(e) => {
                return Attempt::Retry(BackendError::Network {
                    attempts,
                    message: e.to_string(),
                })
            }
        };
        if !status.is_success() {
            let err = BackendError::Provider {
                status: status.as_u16(),
                message: provider_message(&text),
            };
            return if status.is_server_error() || status.as_u16() == 429 {
                Attempt::Retry(err)
            } else {
                Attempt::Done(Err(err))
            };
        }
        Attempt::Done(extract_reply(&text, &self.config.response_path).map(ChatMessage::assistant))
    }
}

impl ChatBackend for HttpChatBackend {
    fn complete(&self, history: &[ChatMessage], params: &ModelParams) -> Result<ChatMessage, BackendError> {
        validate_history(history)?;
        params.validate()?;
        let body = Self::request_body(history, params);
        let retry = self.config.retry;
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body, params, attempts) {
                Attempt::Done(r) => return r,
                Attempt::Retry(err) if attempts > retry.max_retries => return Err(err),
                Attempt::Retry(err) => {
                    let delay = retry.delay(attempts - 1);
                    log::warn!("chat request failed ({err}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                }
            }
        }
    }
}

/// Provider error bodies usually look like `{"error": {"message": ...}}`.
fn provider_message(body: &str) -> String {
    serde_json::from_str::<Value>(body)
        .ok()
        .and_then(|v| {
            v.pointer("/error/message")
                .or_else(|| v.get("error"))
                .or_else(|| v.get("message"))
                .and_then(Value::as_str)
                .map(str::to_string)
        })
        .unwrap_or_else(|| body.trim().chars().take(500).collect())
}

/// Follows a dotted path such as `choices.0.message.content`.
pub fn extract_reply(body: &str, path: &str) -> Result<String, BackendError> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
    let mut cur = &value;
    for seg in path.split('.') {
        let next = match cur {
            Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get(i)),
            Value::Object(map) => map.get(seg),
            _ => None,
        };
        cur = next.ok_or_else(|| {
            BackendError::MalformedResponse(format!("response has no {path:?}"))
        })?;
    }
    match cur.as_str() {
        Some(s) if !s.trim().is_empty() => Ok(s.to_string()),
        Some(_) => Err(BackendError::MalformedResponse("empty reply".into())),
        None => Err(BackendError::MalformedResponse(format!("{path:?} is not a string"))),
    }
}
