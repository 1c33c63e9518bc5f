use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::agreement::{preference_alpha, preference_ratings};
use super::answers::{AnswerMaps, ExpertRating, LaypersonResponse, Level, Q2Answer};
use super::expert::{expert_aggregates, ExpertTable};
use super::severity::{
    confidence_distribution, confidence_strata, question_aggregates, ConfidenceDistribution,
    ConfidenceStrata, PhaseFilter, QuestionTable,
};
use super::votes::{majority_votes, MajorityVotes, PreferenceKind};
use super::AnalyticsError;
use crate::corpus::{SeverityLevel, VariantTag};

type Getter<T> = fn(&T) -> f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaStatus {
    Ok,
    PerfectHomogeneity,
    InsufficientData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaBlock {
    pub status: AlphaStatus,
    pub alpha: Option<f64>,
    pub ratings: usize,
    pub items: usize,
}

/// Every layperson and expert analysis in one serializable value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsReport {
    pub no_data: bool,
    pub layperson_responses: usize,
    pub expert_ratings: usize,
    pub expert: Option<ExpertTable>,
    pub questions: Option<QuestionTable>,
    pub confidence_strata: Option<ConfidenceStrata>,
    pub confidence_distribution: ConfidenceDistribution,
    pub votes: Option<MajorityVotes>,
    pub alpha_most: AlphaBlock,
    pub alpha_least: AlphaBlock,
    pub notes: Vec<String>,
}

fn alpha_block(responses: &[LaypersonResponse], kind: PreferenceKind) -> AlphaBlock {
    let ratings = preference_ratings(responses, kind).len();
    match preference_alpha(responses, kind) {
        Ok(a) => AlphaBlock {
            status: AlphaStatus::Ok,
            alpha: Some(a.alpha),
            ratings,
            items: a.items,
        },
        Err(AnalyticsError::PerfectHomogeneity) => AlphaBlock {
            status: AlphaStatus::PerfectHomogeneity,
            alpha: None,
            ratings,
            items: 0,
        },
        Err(_) => AlphaBlock {
            status: AlphaStatus::InsufficientData,
            alpha: None,
            ratings,
            items: 0,
        },
    }
}

impl AnalyticsReport {
    /// Runs every analysis that the data supports. Blocks that cannot be
    /// computed are `None` and the reason is recorded in `notes`.
    pub fn build(
        responses: &[LaypersonResponse],
        expert_ratings: &[ExpertRating],
        expert_labels: &BTreeMap<String, SeverityLevel>,
        maps: &AnswerMaps,
    ) -> Self {
        let mut notes = Vec::new();
        fn keep<T>(notes: &mut Vec<String>, r: Result<T, AnalyticsError>, what: &str) -> Option<T> {
            r.map_err(|e| notes.push(format!("{what}: {e}"))).ok()
        }
        let no_data = responses.is_empty() && expert_ratings.is_empty();
        let (questions, strata, votes) = if responses.is_empty() {
            (None, None, None)
        } else {
            (
                keep(
                    &mut notes,
                    question_aggregates(responses, expert_labels, maps),
                    "layperson questions",
                ),
                keep(
                    &mut notes,
                    confidence_strata(responses, expert_labels, PhaseFilter::Both),
                    "confidence strata",
                ),
                keep(&mut notes, majority_votes(responses), "majority votes"),
            )
        };
        if no_data {
            notes.push("no data".into());
        }
        let expert = (!expert_ratings.is_empty()).then(|| expert_aggregates(expert_ratings));
        Self {
            no_data,
            layperson_responses: responses.len(),
            expert_ratings: expert_ratings.len(),
            expert,
            questions,
            confidence_strata: strata,
            confidence_distribution: confidence_distribution(responses),
            votes,
            alpha_most: alpha_block(responses, PreferenceKind::Most),
            alpha_least: alpha_block(responses, PreferenceKind::Least),
            notes,
        }
    }

    /// Aligned-text rendering of every block in the report.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if self.no_data {
            out.push_str("No data: the study export contains no accepted responses.\n");
            return out;
        }
        let _ = writeln!(
            out,
            "Responses: {} layperson, {} expert\n",
            self.layperson_responses, self.expert_ratings
        );

        if let Some(expert) = &self.expert {
            out.push_str("Expert evaluation (mean Likert 1-5)\n");
            let _ = write!(out, "{:<14}", "");
            for c in &expert.columns {
                let _ = write!(out, "{:>10}", c.variant.label());
            }
            out.push('\n');
            let rows: [(&str, Getter<super::expert::ExpertColumn>); 5] = [
                ("Correctness", |c| c.correctness),
                ("Completeness", |c| c.completeness),
                ("Hallucination", |c| c.hallucination),
                ("Structure", |c| c.structure),
                ("Simplicity", |c| c.simplicity),
            ];
            for (name, get) in rows {
                let _ = write!(out, "{name:<14}");
                for c in &expert.columns {
                    let _ = write!(out, "{:>10.3}", get(c));
                }
                out.push('\n');
            }
            out.push('\n');
        }

        if let Some(q) = &self.questions {
            out.push_str("Layperson evaluation\n");
            let _ = write!(out, "{:<10}", "");
            for c in &q.columns {
                let _ = write!(out, "{:>10}", c.source);
            }
            out.push('\n');
            let cell = |v: Option<f64>| v.map_or_else(|| format!("{:>10}", "-"), |x| format!("{x:>10.3}"));
            let _ = write!(out, "{:<10}", "Q1");
            for c in &q.columns {
                out.push_str(&cell(c.q1));
            }
            let _ = write!(out, "\n{:<10}", "Q2");
            for c in &q.columns {
                out.push_str(&cell(c.q2));
            }
            let _ = write!(out, "\n{:<10}", "Q3 (MSE)");
            for c in &q.columns {
                out.push_str(&cell(c.q3.map(|e| e.mse)));
            }
            let _ = write!(out, "\n{:<10}", "Q3 (ACC)");
            for c in &q.columns {
                match c.q3 {
                    Some(e) => {
                        let _ = write!(out, "{:>9.1}%", e.accuracy * 100.0);
                    }
                    None => {
                        let _ = write!(out, "{:>10}", "-");
                    }
                }
            }
            let _ = write!(out, "\n{:<10}", "Q4");
            for c in &q.columns {
                out.push_str(&cell(c.q4));
            }
            out.push_str("\n\n");
        }

        if let Some(s) = &self.confidence_strata {
            out.push_str("Confidence (Q2) vs severity guess (Q3)\n");
            let _ = write!(out, "{:<10}", "");
            for level in Q2Answer::ALL {
                let _ = write!(out, "{:>17}", level.default_label());
            }
            let _ = write!(out, "\n{:<10}", "MSE");
            for level in Q2Answer::ALL {
                match s.rows.get(level) {
                    Some(e) => {
                        let _ = write!(out, "{:>17.3}", e.mse);
                    }
                    None => {
                        let _ = write!(out, "{:>17}", "-");
                    }
                }
            }
            let _ = write!(out, "\n{:<10}", "Accuracy");
            for level in Q2Answer::ALL {
                match s.rows.get(level) {
                    Some(e) => {
                        let _ = write!(out, "{:>16.1}%", e.accuracy * 100.0);
                    }
                    None => {
                        let _ = write!(out, "{:>17}", "-");
                    }
                }
            }
            out.push_str("\n\n");
        }

        if let Some(v) = &self.votes {
            let _ = writeln!(out, "Majority votes over {} sentences", v.sentences);
            let _ = write!(out, "{:<10}", "");
            for variant in VariantTag::ALL {
                let _ = write!(out, "{:>10}", variant.label());
            }
            let _ = write!(out, "\n{:<10}", "Most");
            for n in v.most {
                let _ = write!(out, "{n:>10}");
            }
            let _ = write!(out, "\n{:<10}", "Least");
            for n in v.least {
                let _ = write!(out, "{n:>10}");
            }
            out.push('\n');
            if !v.most_ties.is_empty() || !v.least_ties.is_empty() {
                let _ = writeln!(
                    out,
                    "ties credited to every top variant: most {:?}, least {:?}",
                    v.most_ties, v.least_ties
                );
            }
            out.push('\n');
        }

        for (name, block) in [("most", &self.alpha_most), ("least", &self.alpha_least)] {
            match (block.status, block.alpha) {
                (AlphaStatus::Ok, Some(a)) => {
                    let _ = writeln!(
                        out,
                        "Krippendorff's alpha (MASI), {name} preferred: {a:.3} ({} ratings, {} items)",
                        block.ratings, block.items
                    );
                }
                (AlphaStatus::PerfectHomogeneity, _) => {
                    let _ = writeln!(
                        out,
                        "Krippendorff's alpha (MASI), {name} preferred: undefined, all labels identical ({} ratings)",
                        block.ratings
                    );
                }
                _ => {
                    let _ = writeln!(
                        out,
                        "Krippendorff's alpha (MASI), {name} preferred: insufficient data ({} ratings)",
                        block.ratings
                    );
                }
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }

    /// Q2 histogram per source: `source,not_at_all,low_confidence,high_confidence`.
    pub fn confidence_csv(&self) -> String {
        let mut out = String::from("source");
        for level in Q2Answer::ALL {
            out.push(',');
            out.push_str(level.key());
        }
        out.push('\n');
        for (source, counts) in &self.confidence_distribution.rows {
            let _ = writeln!(out, "{source},{},{},{}", counts[0], counts[1], counts[2]);
        }
        out
    }

    /// Vote distribution: `kind,variant,votes,sentences`, one row per number of
    /// raters that picked the variant.
    pub fn votes_csv(&self) -> String {
        let mut out = String::from("kind,variant,votes,sentences\n");
        if let Some(v) = &self.votes {
            for kind in [PreferenceKind::Most, PreferenceKind::Least] {
                for (variant, hist) in v.vote_histogram(kind) {
                    for (k, n) in hist.iter().enumerate() {
                        let _ = writeln!(out, "{},{},{k},{n}", kind.label(), variant.as_str());
                    }
                }
            }
        }
        out
    }
}
