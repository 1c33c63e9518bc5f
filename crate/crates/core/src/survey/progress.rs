use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::answers::{validate_answers, PanelAnswers};
use super::study::{PlannedItem, Study, StudyState, SurveyItem};
use super::SubmitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

/// A submission as sent by a client. `event_id` is the idempotency key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseEvent {
    pub event_id: String,
    pub rater_id: String,
    pub item_id: String,
    pub answers: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitted_at: Option<String>,
}

/// An accepted submission as stored in the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedEvent {
    /// 1-based position in the study log.
    pub seq: u64,
    pub event_id: String,
    pub rater_id: String,
    pub item_id: String,
    pub answers: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitted_at: Option<String>,
    pub received_at_ms: u64,
}

impl AcceptedEvent {
    pub fn from_request(event: ResponseEvent, seq: u64, received_at_ms: u64) -> Self {
        Self {
            seq,
            event_id: event.event_id,
            rater_id: event.rater_id,
            item_id: event.item_id,
            answers: event.answers,
            submitted_at: event.submitted_at,
            received_at_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextItem {
    Item { item: Box<SurveyItem> },
    Done { progress: Progress },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Admission {
    /// Valid and new; append it, then [`StudyProgress::record`] it.
    New(PanelAnswers),
    /// Same `event_id` already stored for this rater and item.
    Duplicate { seq: u64 },
}

/// In-memory index over a study's accepted events. Sequences are linear, so a
/// rater's next item is simply the first one past their answered count.
#[derive(Debug, Clone, Default)]
pub struct StudyProgress {
    events: Vec<AcceptedEvent>,
    by_event_id: HashMap<String, usize>,
    answered: BTreeMap<String, usize>,
}

impl StudyProgress {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[AcceptedEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn answered(&self, rater_id: &str) -> usize {
        self.answered.get(rater_id).copied().unwrap_or(0)
    }

    fn sequence<'s>(&self, study: &'s Study, rater_id: &str) -> Result<&'s [PlannedItem], SubmitError> {
        study
            .sequence(rater_id)
            .ok_or_else(|| SubmitError::UnknownRater(rater_id.to_string()))
    }

    pub fn progress(&self, study: &Study, rater_id: &str) -> Result<Progress, SubmitError> {
        let seq = self.sequence(study, rater_id)?;
        Ok(Progress {
            done: self.answered(rater_id),
            total: seq.len(),
        })
    }

    pub fn next_item(&self, study: &Study, rater_id: &str) -> Result<NextItem, SubmitError> {
        let seq = self.sequence(study, rater_id)?;
        if study.state() != StudyState::Open {
            return Err(SubmitError::NotOpen(study.state()));
        }
        let progress = self.progress(study, rater_id)?;
        Ok(match seq.get(progress.done) {
            Some(item) => NextItem::Item {
                item: Box::new(study.render_item(item, progress)),
            },
            None => NextItem::Done { progress },
        })
    }

    /// Decides whether `event` would be accepted, without changing anything.
    pub fn admit(&self, study: &Study, event: &ResponseEvent) -> Result<Admission, SubmitError> {
        self.admit_inner(study, event, true)
    }

    fn admit_inner(
        &self,
        study: &Study,
        event: &ResponseEvent,
        require_open: bool,
    ) -> Result<Admission, SubmitError> {
        if event.event_id.trim().is_empty() {
            return Err(SubmitError::MissingEventId);
        }
        let seq = self.sequence(study, &event.rater_id)?;
        if let Some(&idx) = self.by_event_id.get(&event.event_id) {
            let prior = &self.events[idx];
            return if prior.rater_id == event.rater_id && prior.item_id == event.item_id {
                Ok(Admission::Duplicate { seq: prior.seq })
            } else {
                Err(SubmitError::EventIdConflict(event.event_id.clone()))
            };
        }
        if require_open && study.state() != StudyState::Open {
            return Err(SubmitError::NotOpen(study.state()));
        }
        let position = seq
            .iter()
            .position(|i| i.item_id == event.item_id)
            .ok_or_else(|| SubmitError::UnknownItem(event.item_id.clone()))?;
        let done = self.answered(&event.rater_id);
        if position < done {
            return Err(SubmitError::AlreadyAnswered(event.item_id.clone()));
        }
        if position > done {
            return Err(SubmitError::OutOfSequence {
                item_id: event.item_id.clone(),
                expected: seq[done].item_id.clone(),
            });
        }
        let item = &seq[position];
        let answers = validate_answers(item.panel, &study.questions(item), &event.answers)?;
        Ok(Admission::New(answers))
    }

    /// Adds an event that has already been admitted and persisted. Replaying a
    /// log goes through here too, so a corrupt or reordered log is rejected.
    pub fn record(&mut self, study: &Study, event: AcceptedEvent) -> Result<(), SubmitError> {
        let expected = self.events.len() as u64 + 1;
        if event.seq != expected {
            return Err(SubmitError::BadSequenceNumber {
                expected,
                found: event.seq,
            });
        }
        let request = ResponseEvent {
            event_id: event.event_id.clone(),
            rater_id: event.rater_id.clone(),
            item_id: event.item_id.clone(),
            answers: event.answers.clone(),
            submitted_at: event.submitted_at.clone(),
        };
        // closing a study must not make its existing log unreadable
        match self.admit_inner(study, &request, false)? {
            Admission::New(_) => {}
            Admission::Duplicate { .. } => {
                return Err(SubmitError::EventIdConflict(event.event_id));
            }
        }
        *self.answered.entry(event.rater_id.clone()).or_insert(0) += 1;
        self.by_event_id
            .insert(event.event_id.clone(), self.events.len());
        self.events.push(event);
        Ok(())
    }

    /// Rebuilds the index from a stored log.
    pub fn replay(
        study: &Study,
        events: impl IntoIterator<Item = AcceptedEvent>,
    ) -> Result<Self, SubmitError> {
        let mut progress = Self::new();
        for e in events {
            progress.record(study, e)?;
        }
        Ok(progress)
    }
}
