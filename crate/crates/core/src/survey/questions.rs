//! The question schema served with every item. Clients render from it and the
//! service validates submitted answers against it, so option keys and labels
//! live in exactly one place.

use serde::{Deserialize, Serialize};

use crate::analytics::{AnswerMaps, Level, ScaleMap};
use crate::corpus::SeverityLevel;

use super::Panel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerOption {
    pub value: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum QuestionKind {
    SingleChoice {
        options: Vec<AnswerOption>,
    },
    MultiChoice {
        options: Vec<AnswerOption>,
        min_selected: usize,
    },
    Likert {
        min: u8,
        max: u8,
        min_label: String,
        max_label: String,
    },
    FreeText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub key: String,
    pub prompt: String,
    pub required: bool,
    pub kind: QuestionKind,
}

impl Question {
    fn required(key: &str, prompt: &str, kind: QuestionKind) -> Self {
        Self {
            key: key.into(),
            prompt: prompt.into(),
            required: true,
            kind,
        }
    }

    fn optional_text(key: &str, prompt: &str) -> Self {
        Self {
            key: key.into(),
            prompt: prompt.into(),
            required: false,
            kind: QuestionKind::FreeText,
        }
    }
}

pub const Q1_PROMPT: &str = "Do you understand the sentence?";
pub const Q2_PROMPT: &str = "Can you guess the severity?";
pub const Q3_PROMPT: &str = "What is the severity?";
pub const Q4_PROMPT: &str = "Does the simplification help you?";

/// Expert axes in form order, with the question asked for each.
pub const EXPERT_AXES: [(&str, &str); 5] = [
    (
        "correctness",
        "Correctness: does the simplification interpret the original sentence correctly?",
    ),
    (
        "completeness",
        "Completeness: does the simplification keep all critical information?",
    ),
    (
        "hallucination",
        "Hallucination: is the simplification free of wrong or invented statements? (5 = none)",
    ),
    (
        "structure",
        "Structure: does the simplification mention the body parts, findings and consequences?",
    ),
    (
        "simplicity",
        "Simplicity: do you think laypeople can understand the sentence?",
    ),
];

fn choice<T: Level>(map: &ScaleMap<T>) -> QuestionKind {
    QuestionKind::SingleChoice {
        options: T::ALL
            .iter()
            .map(|&a| AnswerOption {
                value: a.key().into(),
                label: map.label(a).into(),
                description: None,
            })
            .collect(),
    }
}

/// Q3 options carry the severity rubric so every rater sees the same definitions.
pub fn severity_question() -> Question {
    Question::required(
        "q3",
        Q3_PROMPT,
        QuestionKind::SingleChoice {
            options: SeverityLevel::ALL
                .iter()
                .map(|&l| AnswerOption {
                    value: l.as_str().into(),
                    label: l.label().into(),
                    description: Some(l.definition().into()),
                })
                .collect(),
        },
    )
}

/// Candidate letters for the preference panel: "A", "B", ...
pub fn candidate_letter(index: usize) -> String {
    char::from(b'A' + index as u8).to_string()
}

pub fn questions_for(panel: Panel, maps: &AnswerMaps, candidates: usize) -> Vec<Question> {
    match panel {
        Panel::LayOriginal => vec![
            Question::required("q1", Q1_PROMPT, choice(&maps.q1)),
            Question::required("q2", Q2_PROMPT, choice(&maps.q2)),
            severity_question(),
        ],
        Panel::LaySimplified => vec![
            Question::required("q1", Q1_PROMPT, choice(&maps.q1)),
            Question::required("q2", Q2_PROMPT, choice(&maps.q2)),
            severity_question(),
            Question::required("q4", Q4_PROMPT, choice(&maps.q4)),
        ],
        Panel::LayPreference => {
            let options: Vec<AnswerOption> = (0..candidates)
                .map(|i| AnswerOption {
                    value: candidate_letter(i),
                    label: format!("Simplification {}", candidate_letter(i)),
                    description: None,
                })
                .collect();
            vec![
                Question::required(
                    "most_preferred",
                    "Which simplification(s) do you like the most?",
                    QuestionKind::MultiChoice {
                        options: options.clone(),
                        min_selected: 1,
                    },
                ),
                Question::required(
                    "least_preferred",
                    "Which simplification(s) do you like the least?",
                    QuestionKind::MultiChoice {
                        options,
                        min_selected: 1,
                    },
                ),
                Question::optional_text("justification", "Why? (optional)"),
            ]
        }
        Panel::ExpertRating => {
            let mut qs = Vec::with_capacity(EXPERT_AXES.len() * 2 + 1);
            for (key, prompt) in EXPERT_AXES {
                qs.push(Question::required(
                    key,
                    prompt,
                    QuestionKind::Likert {
                        min: 1,
                        max: 5,
                        min_label: "Strongly disagree".into(),
                        max_label: "Strongly agree".into(),
                    },
                ));
                qs.push(Question::optional_text(
                    &format!("{key}_justification"),
                    "Justification (optional)",
                ));
            }
            qs.push(severity_question());
            qs
        }
    }
}
