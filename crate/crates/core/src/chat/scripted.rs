use std::collections::VecDeque;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{validate_history, BackendError, ChatBackend, ChatMessage, ModelParams, Transcript};

const DEMO_SCRIPT: &str = include_str!("../../data/demo_script.json");

/// Rules that drive the bundled demo corpus through every variant offline.
/// Plain self-correction takes one refine round; CoT stops at once.
pub fn demo_script() -> ScriptFile {
    serde_json::from_str(DEMO_SCRIPT).expect("bundled demo script is valid")
}

/// Reply chosen when the last user message contains `contains`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    pub contains: String,
    pub reply: String,
}

/// On-disk form of a script: an ordered queue, keyed rules, or both.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScriptFile {
    pub queue: Vec<String>,
    pub rules: Vec<ScriptRule>,
}

/// Deterministic backend for tests and offline runs.
///
/// Queued replies are consumed first, in order. Once the queue is empty the
/// first rule whose `contains` text occurs in the last user message answers;
/// rules are not consumed. With neither a queued reply nor a matching rule the
/// call fails with [`BackendError::ScriptExhausted`] (queue-only script) or
/// [`BackendError::NoRuleMatched`].
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    queue: Mutex<VecDeque<String>>,
    rules: Vec<ScriptRule>,
    calls: AtomicUsize,
}

impl ScriptedBackend {
    pub fn from_queue<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            queue: Mutex::new(replies.into_iter().map(Into::into).collect()),
            ..Default::default()
        }
    }

    pub fn from_rules(rules: Vec<ScriptRule>) -> Self {
        Self {
            rules,
            ..Default::default()
        }
    }

    pub fn from_script(script: ScriptFile) -> Self {
        Self {
            queue: Mutex::new(script.queue.into()),
            rules: script.rules,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let script: ScriptFile = serde_json::from_str(&text).map_err(std::io::Error::other)?;
        Ok(Self::from_script(script))
    }

    /// Queues every response of `transcript` in recorded order, so running the
    /// same orchestration again reproduces it.
    pub fn replaying(transcript: &Transcript) -> Self {
        Self::from_queue(transcript.turns().iter().map(|t| t.response.content.clone()))
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().expect("script queue poisoned").len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(
        &self,
        history: &[ChatMessage],
        params: &ModelParams,
    ) -> Result<ChatMessage, BackendError> {
        validate_history(history)?;
        params.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(reply) = self.queue.lock().expect("script queue poisoned").pop_front() {
            return Ok(ChatMessage::assistant(reply));
        }
        if self.rules.is_empty() {
            return Err(BackendError::ScriptExhausted);
        }
        let prompt = history
            .iter()
            .rev()
            .find(|m| m.role == super::Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or_default();
        self.rules
            .iter()
            .find(|r| prompt.contains(&r.contains))
            .map(|r| ChatMessage::assistant(r.reply.clone()))
            .ok_or(BackendError::NoRuleMatched)
    }
}
