//! Chat-model abstraction.
//!
//! A [`ChatBackend`] turns a message history into one assistant message.
//! Implementations here never touch the network: [`ScriptedBackend`] replays
//! canned replies, [`CachedBackend`] puts a content-addressed disk cache in
//! front of any other backend and [`RateLimited`] throttles one.

mod cache;
mod rate_limit;
mod scripted;
mod transcript;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use cache::{cache_key, CacheStats, CachedBackend};
pub use rate_limit::{RateLimited, TokenBucket};
pub use scripted::{demo_script, ScriptFile, ScriptRule, ScriptedBackend};
pub use transcript::{Clock, Transcript, TranscriptError, TranscriptStore, Turn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Sampling parameters sent with every request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    #[serde(with = "duration_secs")]
    pub request_timeout: Duration,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub const DEFAULT_TEMPERATURE: f64 = 0.8;

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            model_name: "gpt-3.5-turbo".into(),
            temperature: DEFAULT_TEMPERATURE,
            max_output_tokens: 1024,
            request_timeout: Duration::from_secs(60),
            seed: None,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(BackendError::InvalidParams(format!(
                "temperature must be a finite value >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(BackendError::InvalidParams(
                "max_output_tokens must be positive".into(),
            ));
        }
        Ok(())
    }
}

mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("message history is empty")]
    EmptyHistory,
    #[error("message {0} has empty content")]
    EmptyMessage(usize),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("scripted backend has no replies left")]
    ScriptExhausted,
    #[error("no scripted rule matches the request")]
    NoRuleMatched,
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("network failure after {attempts} attempt(s): {message}")]
    Network { attempts: u32, message: String },
    #[error("provider returned status {status}: {message}")]
    Provider { status: u16, message: String },
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("response cache error: {0}")]
    Cache(#[from] std::io::Error),
}

/// A chat-completion provider. Implementations must tolerate concurrent calls.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, history: &[ChatMessage], params: &ModelParams)
        -> Result<ChatMessage, BackendError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete(
        &self,
        history: &[ChatMessage],
        params: &ModelParams,
    ) -> Result<ChatMessage, BackendError> {
        (**self).complete(history, params)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(
        &self,
        history: &[ChatMessage],
        params: &ModelParams,
    ) -> Result<ChatMessage, BackendError> {
        (**self).complete(history, params)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<B> {
    fn complete(
        &self,
        history: &[ChatMessage],
        params: &ModelParams,
    ) -> Result<ChatMessage, BackendError> {
        (**self).complete(history, params)
    }
}

/// Precondition check every backend runs before doing any work.
pub fn validate_history(history: &[ChatMessage]) -> Result<(), BackendError> {
    if history.is_empty() {
        return Err(BackendError::EmptyHistory);
    }
    if let Some(i) = history.iter().position(|m| m.content.trim().is_empty()) {
        return Err(BackendError::EmptyMessage(i));
    }
    Ok(())
}
