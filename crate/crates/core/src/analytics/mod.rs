//! Quantitative analysis of survey answers.

mod agreement;
mod answers;
mod expert;
mod latin;
mod report;
mod severity;
mod votes;

pub use agreement::{
    interval_distance, krippendorff_alpha, masi_distance, nominal_distance, preference_alpha,
    preference_ratings, AlphaResult, Rating,
};
pub use answers::{
    AnswerMaps, ExpertRating, LaypersonResponse, Level, Likert, Q1Answer, Q2Answer, Q4Answer,
    ScaleEntry, ScaleMap,
};
pub use expert::{expert_aggregates, ExpertColumn, ExpertTable};
pub use latin::{latin_square_plan, AssignmentPlan};
pub use report::{AlphaBlock, AlphaStatus, AnalyticsReport};
pub use severity::{
    confidence_distribution, confidence_strata, question_aggregates, severity_error,
    ConfidenceDistribution, ConfidenceStrata, Phase, PhaseFilter, QuestionColumn, QuestionTable,
    SeverityError,
};
pub use votes::{majority_votes, MajorityVotes, PreferenceKind, SentenceVotes};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("no expert severity label for sentence {0:?}")]
    MissingExpertLabel(String),
    #[error("no data for group {0}")]
    EmptyGroup(String),
    #[error("sentence {0:?} has no preference votes")]
    NoPreferenceData(String),
    #[error("MASI distance is undefined for an empty set")]
    EmptySet,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("all labels are identical; expected disagreement is zero")]
    PerfectHomogeneity,
}
