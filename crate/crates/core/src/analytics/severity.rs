//! Layperson clarity questions: Q1/Q2/Q4 means, Q3 severity MSE and accuracy,
//! and the confidence-level breakdowns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::answers::{AnswerMaps, LaypersonResponse, Level, Q2Answer};
use super::AnalyticsError;
use crate::corpus::{SeverityLevel, TextSource};

/// Which answers to a question are used: those given on the original
/// sentence or those given after reading the simplification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Original,
    WithSimplification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseFilter {
    #[default]
    Both,
    Original,
    WithSimplification,
}

impl PhaseFilter {
    fn phases(self) -> &'static [Phase] {
        match self {
            PhaseFilter::Both => &[Phase::Original, Phase::WithSimplification],
            PhaseFilter::Original => &[Phase::Original],
            PhaseFilter::WithSimplification => &[Phase::WithSimplification],
        }
    }
}

/// Mean squared error and exact-match accuracy of severity guesses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeverityError {
    pub mse: f64,
    pub accuracy: f64,
    pub n: usize,
}

impl LaypersonResponse {
    pub fn q3(&self, phase: Phase) -> Option<SeverityLevel> {
        match phase {
            Phase::Original => self.q3_orig,
            Phase::WithSimplification => self.q3_simp,
        }
    }

    pub fn q2(&self, phase: Phase) -> Option<Q2Answer> {
        match phase {
            Phase::Original => self.q2_orig,
            Phase::WithSimplification => self.q2_simp,
        }
    }
}

fn expert_label(
    expert: &BTreeMap<String, SeverityLevel>,
    sentence_id: &str,
) -> Result<SeverityLevel, AnalyticsError> {
    expert
        .get(sentence_id)
        .copied()
        .ok_or_else(|| AnalyticsError::MissingExpertLabel(sentence_id.to_string()))
}

fn check_labels<'a>(
    responses: impl IntoIterator<Item = &'a LaypersonResponse>,
    expert: &BTreeMap<String, SeverityLevel>,
) -> Result<(), AnalyticsError> {
    for r in responses {
        expert_label(expert, &r.sentence_id)?;
    }
    Ok(())
}

/// Accumulates (guess, truth) pairs in insertion order.
#[derive(Default)]
struct ErrorAccumulator {
    sq_sum: f64,
    hits: usize,
    n: usize,
}

impl ErrorAccumulator {
    fn push(&mut self, guess: SeverityLevel, truth: SeverityLevel) {
        let d = AnswerMaps::q3(guess) - AnswerMaps::q3(truth);
        self.sq_sum += d * d;
        self.hits += usize::from(guess == truth);
        self.n += 1;
    }

    fn finish(self) -> Option<SeverityError> {
        (self.n > 0).then(|| SeverityError {
            mse: self.sq_sum / self.n as f64,
            accuracy: self.hits as f64 / self.n as f64,
            n: self.n,
        })
    }
}

/// MSE and accuracy of one phase's Q3 answers against the expert labels.
/// Responses without a Q3 answer in that phase are skipped.
pub fn severity_error(
    responses: &[LaypersonResponse],
    expert: &BTreeMap<String, SeverityLevel>,
    phase: Phase,
) -> Result<SeverityError, AnalyticsError> {
    check_labels(responses, expert)?;
    let mut acc = ErrorAccumulator::default();
    for r in responses {
        if let Some(guess) = r.q3(phase) {
            acc.push(guess, expert_label(expert, &r.sentence_id)?);
        }
    }
    acc.finish()
        .ok_or_else(|| AnalyticsError::EmptyGroup("severity answers".into()))
}

/// One column of the layperson block: the original sentence or one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionColumn {
    pub source: String,
    pub responses: usize,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub q3: Option<SeverityError>,
    /// Not asked for the original sentence.
    pub q4: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionTable {
    pub columns: Vec<QuestionColumn>,
}

impl QuestionTable {
    pub fn column(&self, label: &str) -> Option<&QuestionColumn> {
        self.columns.iter().find(|c| c.source == label)
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Q1, Q2, Q4 means and Q3 severity error per source. The Original column
/// pools every response's original-sentence answers; a variant column uses
/// the with-simplification answers of the responses assigned that variant.
pub fn question_aggregates(
    responses: &[LaypersonResponse],
    expert: &BTreeMap<String, SeverityLevel>,
    maps: &AnswerMaps,
) -> Result<QuestionTable, AnalyticsError> {
    check_labels(responses, expert)?;
    let mut columns = Vec::with_capacity(TextSource::ALL.len());
    for source in TextSource::ALL {
        let (group, phase): (Vec<&LaypersonResponse>, Phase) = match source {
            TextSource::Original => (responses.iter().collect(), Phase::Original),
            TextSource::Variant(v) => (
                responses.iter().filter(|r| r.assigned_variant == v).collect(),
                Phase::WithSimplification,
            ),
        };
        if group.is_empty() {
            return Err(AnalyticsError::EmptyGroup(source.label().to_string()));
        }
        let q1 = mean_of(group.iter().filter_map(|r| match phase {
            Phase::Original => r.q1_orig,
            Phase::WithSimplification => r.q1_simp,
        }).map(|a| maps.q1.value(a)));
        let q2 = mean_of(group.iter().filter_map(|r| r.q2(phase)).map(|a| maps.q2.value(a)));
        let mut acc = ErrorAccumulator::default();
        for r in &group {
            if let Some(guess) = r.q3(phase) {
                acc.push(guess, expert_label(expert, &r.sentence_id)?);
            }
        }
        let q4 = match phase {
            Phase::Original => None,
            Phase::WithSimplification => {
                mean_of(group.iter().filter_map(|r| r.q4).map(|a| maps.q4.value(a)))
            }
        };
        columns.push(QuestionColumn {
            source: source.label().to_string(),
            responses: group.len(),
            q1,
            q2,
            q3: acc.finish(),
            q4,
        });
    }
    Ok(QuestionTable { columns })
}

/// Severity error split by the confidence (Q2) the rater reported alongside
/// the guess. Empty strata are absent rather than zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceStrata {
    pub filter: PhaseFilter,
    pub rows: BTreeMap<Q2Answer, SeverityError>,
}

pub fn confidence_strata(
    responses: &[LaypersonResponse],
    expert: &BTreeMap<String, SeverityLevel>,
    filter: PhaseFilter,
) -> Result<ConfidenceStrata, AnalyticsError> {
    check_labels(responses, expert)?;
    let mut accs: BTreeMap<Q2Answer, ErrorAccumulator> = BTreeMap::new();
    for r in responses {
        let truth = expert_label(expert, &r.sentence_id)?;
        for &phase in filter.phases() {
            if let (Some(conf), Some(guess)) = (r.q2(phase), r.q3(phase)) {
                accs.entry(conf).or_default().push(guess, truth);
            }
        }
    }
    Ok(ConfidenceStrata {
        filter,
        rows: accs
            .into_iter()
            .filter_map(|(k, acc)| acc.finish().map(|e| (k, e)))
            .collect(),
    })
}

/// Histogram of Q2 answers per source, counts indexed like [`Q2Answer`]'s levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceDistribution {
    pub rows: Vec<(String, [usize; 3])>,
}

pub fn confidence_distribution(responses: &[LaypersonResponse]) -> ConfidenceDistribution {
    let rows = TextSource::ALL
        .into_iter()
        .map(|source| {
            let mut counts = [0usize; 3];
            let answers = responses.iter().filter_map(|r| match source {
                TextSource::Original => r.q2_orig,
                TextSource::Variant(v) if r.assigned_variant == v => r.q2_simp,
                TextSource::Variant(_) => None,
            });
            for a in answers {
                let idx = Q2Answer::ALL.iter().position(|&l| l == a).expect("known level");
                counts[idx] += 1;
            }
            (source.label().to_string(), counts)
        })
        .collect();
    ConfidenceDistribution { rows }
}
