use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{ChatMessage, ModelParams};

/// One agent call: what was sent, what came back, when, and with which params.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub agent: String,
    pub request: Vec<ChatMessage>,
    pub response: ChatMessage,
    pub timestamp_ms: u64,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranscriptError {
    #[error("transcript {0:?} is finalized")]
    Finalized(String),
}

/// Append-only log of every agent call made for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    id: String,
    session_label: String,
    turns: Vec<Turn>,
    finalized: bool,
}

impl Transcript {
    pub fn new(id: impl Into<String>, session_label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            session_label: session_label.into(),
            turns: Vec::new(),
            finalized: false,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn session_label(&self) -> &str {
        &self.session_label
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    /// Appends one turn. A timestamp earlier than the previous turn's is
    /// raised to it so turns stay time-ordered.
    pub fn record_turn(
        &mut self,
        agent: impl Into<String>,
        request: Vec<ChatMessage>,
        response: ChatMessage,
        params: &ModelParams,
        timestamp_ms: u64,
    ) -> Result<(), TranscriptError> {
        if self.finalized {
            return Err(TranscriptError::Finalized(self.id.clone()));
        }
        let floor = self.turns.last().map_or(0, |t| t.timestamp_ms);
        self.turns.push(Turn {
            agent: agent.into(),
            request,
            response,
            timestamp_ms: timestamp_ms.max(floor),
            params: params.clone(),
        });
        Ok(())
    }

    pub fn finalize(&mut self) {
        self.finalized = true;
    }

    pub fn turns_by<'a>(&'a self, agent: &'a str) -> impl Iterator<Item = &'a Turn> + 'a {
        self.turns.iter().filter(move |t| t.agent == agent)
    }

    /// Response of the last turn recorded for `agent`.
    pub fn last_response(&self, agent: &str) -> Option<&str> {
        self.turns
            .iter()
            .rev()
            .find(|t| t.agent == agent)
            .map(|t| t.response.content.as_str())
    }
}

/// Where turn timestamps come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Clock {
    /// Milliseconds since the Unix epoch.
    #[default]
    System,
    /// The turn's index within its transcript. Makes transcripts byte-stable.
    Logical,
}

impl Clock {
    pub fn stamp(self, transcript: &Transcript) -> u64 {
        match self {
            Clock::System => SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
            Clock::Logical => transcript.len() as u64,
        }
    }
}

/// Directory of transcripts, one single-line JSON file per transcript id.
#[derive(Debug, Clone)]
pub struct TranscriptStore {
    dir: PathBuf,
}

impl TranscriptStore {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, id: &str) -> PathBuf {
        let safe: String = id
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        self.dir.join(format!("{safe}.jsonl"))
    }

    /// Writes via temp file + rename; distinct ids never touch the same file.
    pub fn save(&self, transcript: &Transcript) -> std::io::Result<PathBuf> {
        let path = self.path_for(transcript.id());
        let tmp = path.with_extension("jsonl.tmp");
        fs::write(&tmp, crate::jsonl::to_line(transcript))?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn load(&self, id: &str) -> std::io::Result<Transcript> {
        let text = fs::read_to_string(self.path_for(id))?;
        serde_json::from_str(text.trim_end()).map_err(std::io::Error::other)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.path_for(id).exists()
    }
}
