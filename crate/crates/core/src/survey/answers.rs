//! Schema validation of submitted answers and their typed form.

use std::collections::{BTreeMap, BTreeSet};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::questions::{Question, QuestionKind, EXPERT_AXES};
use super::Panel;
use crate::analytics::{Likert, Q1Answer, Q2Answer, Q4Answer};
use crate::corpus::SeverityLevel;

/// A rejected answer, naming the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{field}: {message}")]
pub struct AnswerError {
    pub field: String,
    pub message: String,
}

impl AnswerError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginalAnswers {
    pub q1: Q1Answer,
    pub q2: Q2Answer,
    pub q3: SeverityLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedAnswers {
    pub q1: Q1Answer,
    pub q2: Q2Answer,
    pub q3: SeverityLevel,
    pub q4: Q4Answer,
}

/// Candidate letters as shown to the rater; map them through the item's
/// candidate order to get variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceAnswers {
    pub most_preferred: BTreeSet<String>,
    pub least_preferred: BTreeSet<String>,
    #[serde(default)]
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertAnswers {
    pub correctness: Likert,
    pub completeness: Likert,
    pub hallucination: Likert,
    pub structure: Likert,
    pub simplicity: Likert,
    pub severity: SeverityLevel,
    /// Per-axis free text, keyed by axis name; empty notes are dropped.
    pub justifications: BTreeMap<String, String>,
}

impl ExpertAnswers {
    /// All notes as `axis: text` lines in form order.
    pub fn joined_justification(&self) -> String {
        EXPERT_AXES
            .iter()
            .filter_map(|(axis, _)| {
                self.justifications
                    .get(*axis)
                    .map(|text| format!("{axis}: {text}"))
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PanelAnswers {
    Original(OriginalAnswers),
    Simplified(SimplifiedAnswers),
    Preference(PreferenceAnswers),
    Expert(ExpertAnswers),
}

fn check_against_schema(questions: &[Question], answers: &Value) -> Result<(), AnswerError> {
    let obj = answers
        .as_object()
        .ok_or_else(|| AnswerError::new("answers", "must be a JSON object"))?;
    if let Some(extra) = obj.keys().find(|k| !questions.iter().any(|q| &q.key == *k)) {
        return Err(AnswerError::new(extra, "unknown field"));
    }
    for q in questions {
        let value = match obj.get(&q.key) {
            None | Some(Value::Null) if q.required => {
                return Err(AnswerError::new(&q.key, "required"));
            }
            None | Some(Value::Null) => continue,
            Some(v) => v,
        };
        match &q.kind {
            QuestionKind::SingleChoice { options } => {
                let s = value
                    .as_str()
                    .ok_or_else(|| AnswerError::new(&q.key, "expected a string"))?;
                if !options.iter().any(|o| o.value == s) {
                    return Err(AnswerError::new(&q.key, format!("unknown option {s:?}")));
                }
            }
            QuestionKind::MultiChoice {
                options,
                min_selected,
            } => {
                let items = value
                    .as_array()
                    .ok_or_else(|| AnswerError::new(&q.key, "expected an array"))?;
                let mut seen = BTreeSet::new();
                for item in items {
                    let s = item
                        .as_str()
                        .ok_or_else(|| AnswerError::new(&q.key, "expected strings"))?;
                    if !options.iter().any(|o| o.value == s) {
                        return Err(AnswerError::new(&q.key, format!("unknown option {s:?}")));
                    }
                    if !seen.insert(s) {
                        return Err(AnswerError::new(&q.key, format!("{s:?} selected twice")));
                    }
                }
                if seen.len() < *min_selected {
                    return Err(AnswerError::new(
                        &q.key,
                        format!("select at least {min_selected}"),
                    ));
                }
            }
            QuestionKind::Likert { min, max, .. } => {
                let n = value
                    .as_u64()
                    .ok_or_else(|| AnswerError::new(&q.key, "expected an integer"))?;
                if n < u64::from(*min) || n > u64::from(*max) {
                    return Err(AnswerError::new(
                        &q.key,
                        format!("must be in {min}..={max}, got {n}"),
                    ));
                }
            }
            QuestionKind::FreeText => {
                if !value.is_string() {
                    return Err(AnswerError::new(&q.key, "expected a string"));
                }
            }
        }
    }
    Ok(())
}

fn field<T: DeserializeOwned>(answers: &Value, key: &str) -> Result<T, AnswerError> {
    serde_json::from_value(answers.get(key).cloned().unwrap_or(Value::Null))
        .map_err(|e| AnswerError::new(key, e.to_string()))
}

fn text(answers: &Value, key: &str) -> String {
    answers
        .get(key)
        .and_then(Value::as_str)
        .unwrap_or_default()
        .trim()
        .to_string()
}

/// Validates `answers` against the panel's questions and returns the typed form.
pub fn validate_answers(
    panel: Panel,
    questions: &[Question],
    answers: &Value,
) -> Result<PanelAnswers, AnswerError> {
    check_against_schema(questions, answers)?;
    Ok(match panel {
        Panel::LayOriginal => PanelAnswers::Original(OriginalAnswers {
            q1: field(answers, "q1")?,
            q2: field(answers, "q2")?,
            q3: field(answers, "q3")?,
        }),
        Panel::LaySimplified => PanelAnswers::Simplified(SimplifiedAnswers {
            q1: field(answers, "q1")?,
            q2: field(answers, "q2")?,
            q3: field(answers, "q3")?,
            q4: field(answers, "q4")?,
        }),
        Panel::LayPreference => {
            let most: BTreeSet<String> = field(answers, "most_preferred")?;
            let least: BTreeSet<String> = field(answers, "least_preferred")?;
            if let Some(both) = most.intersection(&least).next() {
                return Err(AnswerError::new(
                    "least_preferred",
                    format!("{both:?} is also marked most preferred"),
                ));
            }
            PanelAnswers::Preference(PreferenceAnswers {
                most_preferred: most,
                least_preferred: least,
                justification: text(answers, "justification"),
            })
        }
        Panel::ExpertRating => {
            let justifications = EXPERT_AXES
                .iter()
                .filter_map(|(axis, _)| {
                    let note = text(answers, &format!("{axis}_justification"));
                    (!note.is_empty()).then(|| (axis.to_string(), note))
                })
                .collect();
            PanelAnswers::Expert(ExpertAnswers {
                correctness: field(answers, "correctness")?,
                completeness: field(answers, "completeness")?,
                hallucination: field(answers, "hallucination")?,
                structure: field(answers, "structure")?,
                simplicity: field(answers, "simplicity")?,
                severity: field(answers, "q3")?,
                justifications,
            })
        }
    })
}
