//! HTTP survey service.
//!
//! Each hosted study owns an append-only `events.jsonl` log. Submissions are
//! validated against the study's item sequence, written and synced to the log
//! while holding the study's appender lock, and only then acknowledged. On
//! start-up the log is replayed to rebuild progress.
//!
//! The wire protocol is described in `API.md` next to this crate's manifest.

mod api;
mod log;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use radsimp_core::survey::{
    AcceptedEvent, Admission, NextItem, ResponseEvent, Study, StudyProgress, SubmitError,
    SurveyExport,
};

pub use api::{router, serve, ApiError, SubmitRequest, SubmitResponse};
pub use log::{EventLog, LogError};

pub const ADMIN_TOKEN_ENV: &str = "RADSIMP_ADMIN_TOKEN";
pub const LOG_FILE: &str = "events.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("event log {path} does not replay against the study: {source}")]
    Replay {
        path: PathBuf,
        #[source]
        source: SubmitError,
    },
    #[error("study {0:?} is hosted twice")]
    DuplicateStudy(String),
}

#[derive(Debug, thiserror::Error)]
pub enum SubmitFailure {
    #[error(transparent)]
    Rejected(#[from] SubmitError),
    #[error(transparent)]
    Log(#[from] LogError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Accepted { seq: u64 },
    Duplicate { seq: u64 },
}

/// One hosted study: immutable definition, progress index and its log.
pub struct StudyHandle {
    study: Study,
    progress: RwLock<StudyProgress>,
    appender: Mutex<EventLog>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl StudyHandle {
    /// Opens `{dir}/events.jsonl` and replays it.
    pub fn open(study: Study, dir: &Path) -> Result<Self, ServiceError> {
        let path = dir.join(LOG_FILE);
        let (log, events) = EventLog::open(&path)?;
        let progress = StudyProgress::replay(&study, events)
            .map_err(|source| ServiceError::Replay { path, source })?;
        Ok(Self {
            study,
            progress: RwLock::new(progress),
            appender: Mutex::new(log),
        })
    }

    pub fn study(&self) -> &Study {
        &self.study
    }

    pub fn event_count(&self) -> usize {
        self.progress.read().unwrap().len()
    }

    pub fn log_path(&self) -> PathBuf {
        self.appender.lock().unwrap().path().to_path_buf()
    }

    pub fn next_item(&self, rater_id: &str) -> Result<NextItem, SubmitError> {
        self.progress.read().unwrap().next_item(&self.study, rater_id)
    }

    /// Validates, persists, then indexes. Blocking: performs an fsync.
    pub fn submit(&self, event: ResponseEvent) -> Result<Outcome, SubmitFailure> {
        let mut log = self.appender.lock().unwrap();
        let seq = {
            let progress = self.progress.read().unwrap();
            match progress.admit(&self.study, &event)? {
                Admission::Duplicate { seq } => return Ok(Outcome::Duplicate { seq }),
                Admission::New(_) => progress.len() as u64 + 1,
            }
        };
        let accepted = AcceptedEvent::from_request(event, seq, now_ms());
        log.append(&accepted)?;
        self.progress
            .write()
            .unwrap()
            .record(&self.study, accepted)
            .expect("event was admitted under the appender lock");
        Ok(Outcome::Accepted { seq })
    }

    pub fn export(&self) -> SurveyExport {
        let progress = self.progress.read().unwrap();
        SurveyExport::from_study(&self.study, progress.events())
    }
}

/// Everything the HTTP layer needs.
#[derive(Clone)]
pub struct ServiceState {
    studies: Arc<BTreeMap<String, Arc<StudyHandle>>>,
    admin_token: Option<Arc<str>>,
}

impl ServiceState {
    /// Hosts each study under `{state_dir}/{study_id}/`.
    pub fn open(
        studies: Vec<Study>,
        state_dir: &Path,
        admin_token: Option<String>,
    ) -> Result<Self, ServiceError> {
        let mut map = BTreeMap::new();
        for study in studies {
            let id = study.id().to_string();
            let dir = state_dir.join(&id);
            let handle = StudyHandle::open(study, &dir)?;
            if map.insert(id.clone(), Arc::new(handle)).is_some() {
                return Err(ServiceError::DuplicateStudy(id));
            }
        }
        Ok(Self {
            studies: Arc::new(map),
            admin_token: admin_token.filter(|t| !t.is_empty()).map(Arc::from),
        })
    }

    pub fn study(&self, id: &str) -> Option<&Arc<StudyHandle>> {
        self.studies.get(id)
    }

    pub fn studies(&self) -> impl Iterator<Item = &Arc<StudyHandle>> {
        self.studies.values()
    }

    pub fn admin_token(&self) -> Option<&str> {
        self.admin_token.as_deref()
    }
}
