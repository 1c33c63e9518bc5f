use std::collections::BTreeSet;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{SeverityLevel, VariantTag};

/// A closed set of answer options for one survey question.
pub trait Level: Copy + Ord + Serialize + DeserializeOwned + 'static {
    const ALL: &'static [Self];
    fn key(self) -> &'static str;
    fn default_label(self) -> &'static str;
    fn default_value(self) -> f64;
}

/// Q1: do you understand the sentence?
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Q1Answer {
    NotAtAll,
    Somewhat,
    Mostly,
    Completely,
}

/// Q2: how confident are you about the severity?
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Q2Answer {
    NotAtAll,
    LowConfidence,
    HighConfidence,
}

/// Q4: did the simplification help?
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Q4Answer {
    FurtherConfused,
    NoHelp,
    SomewhatBetter,
    MuchBetter,
}

impl Level for Q1Answer {
    const ALL: &'static [Self] = &[
        Q1Answer::NotAtAll,
        Q1Answer::Somewhat,
        Q1Answer::Mostly,
        Q1Answer::Completely,
    ];

    fn key(self) -> &'static str {
        match self {
            Q1Answer::NotAtAll => "not_at_all",
            Q1Answer::Somewhat => "somewhat",
            Q1Answer::Mostly => "mostly",
            Q1Answer::Completely => "completely",
        }
    }

    fn default_label(self) -> &'static str {
        match self {
            Q1Answer::NotAtAll => "Not at all",
            Q1Answer::Somewhat => "Somewhat",
            Q1Answer::Mostly => "Mostly",
            Q1Answer::Completely => "Completely",
        }
    }

    fn default_value(self) -> f64 {
        match self {
            Q1Answer::NotAtAll => 1.0,
            Q1Answer::Somewhat => 2.0,
            Q1Answer::Mostly => 3.0,
            Q1Answer::Completely => 4.0,
        }
    }
}

impl Level for Q2Answer {
    const ALL: &'static [Self] = &[
        Q2Answer::NotAtAll,
        Q2Answer::LowConfidence,
        Q2Answer::HighConfidence,
    ];

    fn key(self) -> &'static str {
        match self {
            Q2Answer::NotAtAll => "not_at_all",
            Q2Answer::LowConfidence => "low_confidence",
            Q2Answer::HighConfidence => "high_confidence",
        }
    }

    fn default_label(self) -> &'static str {
        match self {
            Q2Answer::NotAtAll => "Not at all",
            Q2Answer::LowConfidence => "Low confidence",
            Q2Answer::HighConfidence => "High confidence",
        }
    }

    fn default_value(self) -> f64 {
        match self {
            Q2Answer::NotAtAll => 1.0,
            Q2Answer::LowConfidence => 2.0,
            Q2Answer::HighConfidence => 3.0,
        }
    }
}

impl Level for Q4Answer {
    const ALL: &'static [Self] = &[
        Q4Answer::FurtherConfused,
        Q4Answer::NoHelp,
        Q4Answer::SomewhatBetter,
        Q4Answer::MuchBetter,
    ];

    fn key(self) -> &'static str {
        match self {
            Q4Answer::FurtherConfused => "further_confused",
            Q4Answer::NoHelp => "no_help",
            Q4Answer::SomewhatBetter => "somewhat_better",
            Q4Answer::MuchBetter => "much_better",
        }
    }

    fn default_label(self) -> &'static str {
        match self {
            Q4Answer::FurtherConfused => "Further confused",
            Q4Answer::NoHelp => "No help",
            Q4Answer::SomewhatBetter => "Somewhat better",
            Q4Answer::MuchBetter => "Much better",
        }
    }

    fn default_value(self) -> f64 {
        match self {
            Q4Answer::FurtherConfused => -1.0,
            Q4Answer::NoHelp => 0.0,
            Q4Answer::SomewhatBetter => 1.0,
            Q4Answer::MuchBetter => 2.0,
        }
    }
}

impl Level for SeverityLevel {
    const ALL: &'static [Self] = &SeverityLevel::ALL;

    fn key(self) -> &'static str {
        self.as_str()
    }

    fn default_label(self) -> &'static str {
        self.label()
    }

    fn default_value(self) -> f64 {
        f64::from(self.numeric())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleEntry<T> {
    pub answer: T,
    pub label: String,
    pub value: f64,
}

/// Display label and numeric value for every option of one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound = "T: Level")]
pub struct ScaleMap<T: Level> {
    pub entries: Vec<ScaleEntry<T>>,
}

impl<T: Level> Default for ScaleMap<T> {
    fn default() -> Self {
        Self {
            entries: T::ALL
                .iter()
                .map(|&answer| ScaleEntry {
                    answer,
                    label: answer.default_label().to_string(),
                    value: answer.default_value(),
                })
                .collect(),
        }
    }
}

impl<T: Level> ScaleMap<T> {
    pub fn value(&self, answer: T) -> f64 {
        self.entries
            .iter()
            .find(|e| e.answer == answer)
            .map(|e| e.value)
            .unwrap_or_else(|| answer.default_value())
    }

    pub fn label(&self, answer: T) -> &str {
        self.entries
            .iter()
            .find(|e| e.answer == answer)
            .map(|e| e.label.as_str())
            .unwrap_or_else(|| answer.default_label())
    }

    /// Every option appears once, values are distinct and finite.
    pub fn validate(&self, question: &str) -> Result<(), String> {
        let answers: BTreeSet<T> = self.entries.iter().map(|e| e.answer).collect();
        if answers.len() != self.entries.len() || answers.len() != T::ALL.len() {
            return Err(format!("{question}: map must list each option exactly once"));
        }
        let mut values: Vec<f64> = self.entries.iter().map(|e| e.value).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(format!("{question}: values must be finite"));
        }
        values.sort_by(f64::total_cmp);
        if values.windows(2).any(|w| w[0] == w[1]) {
            return Err(format!("{question}: values must be distinct"));
        }
        Ok(())
    }
}

/// Numeric conversion of categorical answers. Q3 uses the fixed severity canon.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AnswerMaps {
    pub q1: ScaleMap<Q1Answer>,
    pub q2: ScaleMap<Q2Answer>,
    pub q4: ScaleMap<Q4Answer>,
}

impl AnswerMaps {
    pub fn validate(&self) -> Result<(), String> {
        self.q1.validate("q1")?;
        self.q2.validate("q2")?;
        self.q4.validate("q4")
    }

    pub fn q3(level: SeverityLevel) -> f64 {
        f64::from(level.numeric())
    }
}

/// Everything one layperson answered for one sentence.
///
/// `*_orig` answers were given on the original sentence alone, `*_simp` after
/// reading the assigned simplification. Missing answers are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaypersonResponse {
    pub rater_id: String,
    pub sentence_id: String,
    pub assigned_variant: VariantTag,
    pub q1_orig: Option<Q1Answer>,
    pub q2_orig: Option<Q2Answer>,
    pub q3_orig: Option<SeverityLevel>,
    pub q1_simp: Option<Q1Answer>,
    pub q2_simp: Option<Q2Answer>,
    pub q3_simp: Option<SeverityLevel>,
    pub q4: Option<Q4Answer>,
    pub most_preferred: BTreeSet<VariantTag>,
    pub least_preferred: BTreeSet<VariantTag>,
    #[serde(default)]
    pub justification: String,
}

impl LaypersonResponse {
    /// Empty with only the keys filled in.
    pub fn new(rater_id: &str, sentence_id: &str, assigned_variant: VariantTag) -> Self {
        Self {
            rater_id: rater_id.into(),
            sentence_id: sentence_id.into(),
            assigned_variant,
            q1_orig: None,
            q2_orig: None,
            q3_orig: None,
            q1_simp: None,
            q2_simp: None,
            q3_simp: None,
            q4: None,
            most_preferred: BTreeSet::new(),
            least_preferred: BTreeSet::new(),
            justification: String::new(),
        }
    }

    /// Problems a data-entry check should flag.
    pub fn validation_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if self.most_preferred.is_empty() {
            issues.push("most_preferred is empty".to_string());
        }
        if self.least_preferred.is_empty() {
            issues.push("least_preferred is empty".to_string());
        }
        let overlap: Vec<_> = self
            .most_preferred
            .intersection(&self.least_preferred)
            .map(|v| v.label())
            .collect();
        if !overlap.is_empty() {
            issues.push(format!("variants in both most and least: {}", overlap.join(", ")));
        }
        issues
    }
}

/// A 1-5 Likert score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Likert(u8);

impl Likert {
    pub fn new(v: u8) -> Option<Self> {
        (1..=5).contains(&v).then_some(Self(v))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Likert {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Likert::new(v).ok_or_else(|| format!("Likert score must be in 1..=5, got {v}"))
    }
}

impl From<Likert> for u8 {
    fn from(l: Likert) -> u8 {
        l.0
    }
}

/// One expert judgement of one simplification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertRating {
    pub rater_id: String,
    pub sentence_id: String,
    pub variant: VariantTag,
    pub correctness: Likert,
    pub completeness: Likert,
    pub hallucination: Likert,
    pub structure: Likert,
    pub simplicity: Likert,
    pub severity: SeverityLevel,
    #[serde(default)]
    pub justification: String,
}
