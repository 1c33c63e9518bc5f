//! Patient-friendly simplification of radiology sentences and the tooling
//! needed to evaluate it with human raters.
//!
//! The crate is organised by concern:
//!
//! * [`corpus`]: sentences, simplification records and their line-delimited files.
//! * [`chat`]: the chat-model abstraction, scripted and caching backends, transcripts.
//! * [`simplifier`]: Plain/CoT prompting and the four-agent self-correction loop.
//! * [`readability`]: FKGL, GFI and ARI with a deterministic tokenizer.
//! * [`analytics`]: answer maps, severity MSE/accuracy, vote tallies,
//!   Krippendorff's alpha with MASI distance and Latin-square planning.
//! * [`survey`]: the study data model shared by the survey service and analytics.
//!
//! Nothing in here touches the network; the live HTTP client lives in
//! `radsimp-llm` and the HTTP survey service in `radsimp-survey`.

pub mod analytics;
pub mod chat;
pub mod corpus;
pub mod jsonl;
pub mod readability;
pub mod simplifier;
pub mod survey;

pub use corpus::{RadiologySentence, SeverityLevel, SimplificationRecord, VariantTag};
