//! Study definition, per-rater item sequencing, answer validation and the
//! export format. The HTTP service in `radsimp-survey` is a thin shell around
//! [`Study`] and [`StudyProgress`]; analytics reads [`SurveyExport`].

mod answers;
mod export;
mod progress;
mod questions;
mod study;

use serde::{Deserialize, Serialize};

pub use answers::{
    validate_answers, AnswerError, ExpertAnswers, OriginalAnswers, PanelAnswers,
    PreferenceAnswers, SimplifiedAnswers,
};
pub use export::{
    ExportError, ExportHeader, ExportLine, RosterEntry, SurveyExport, EXPORT_FORMAT,
    EXPORT_VERSION,
};
pub use progress::{Admission, AcceptedEvent, NextItem, Progress, ResponseEvent, StudyProgress};
pub use questions::{
    candidate_letter, questions_for, severity_question, AnswerOption, Question, QuestionKind,
    EXPERT_AXES, Q1_PROMPT, Q2_PROMPT, Q3_PROMPT, Q4_PROMPT,
};
pub use study::{
    expert_order, preference_order, Candidate, PlannedItem, RaterSpec, Role, Study, StudyConfig,
    StudyState, SurveyItem,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Panel {
    LayOriginal,
    LaySimplified,
    LayPreference,
    ExpertRating,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StudyError {
    #[error("invalid study: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubmitError {
    #[error("unknown rater {0:?}")]
    UnknownRater(String),
    #[error("study is {0:?}")]
    NotOpen(StudyState),
    #[error("event_id is required")]
    MissingEventId,
    #[error("event id {0:?} was already used for a different item")]
    EventIdConflict(String),
    #[error("unknown item {0:?}")]
    UnknownItem(String),
    #[error("item {0:?} is already answered")]
    AlreadyAnswered(String),
    #[error("item {item_id:?} is out of sequence; next item is {expected:?}")]
    OutOfSequence { item_id: String, expected: String },
    #[error("invalid answer for {}: {}", .0.field, .0.message)]
    InvalidAnswer(#[from] AnswerError),
    #[error("log sequence number {found}, expected {expected}")]
    BadSequenceNumber { expected: u64, found: u64 },
}
