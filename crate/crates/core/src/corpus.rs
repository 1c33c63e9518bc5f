//! Sentences, simplification records and their on-disk formats.
//!
//! Both files are UTF-8 JSONL. A corpus line looks like
//! `{"id":"s1","text":"...","severity":"mild"}` (severity optional) and a
//! simplification line like
//! `{"sentence_id":"s1","variant":"cot_sc","text":"...","iterations":2,"transcript_ref":"s1/cot_sc"}`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::jsonl::{self, JsonlError};

const DEMO_CORPUS: &str = include_str!("../data/demo_corpus.jsonl");

/// Five-level severity rubric shared by experts and laypeople.
///
/// The numeric canon is Critical=1 through Healthy=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeverityLevel {
    Critical,
    Serious,
    Moderate,
    Mild,
    Healthy,
}

impl SeverityLevel {
    pub const ALL: [SeverityLevel; 5] = [
        SeverityLevel::Critical,
        SeverityLevel::Serious,
        SeverityLevel::Moderate,
        SeverityLevel::Mild,
        SeverityLevel::Healthy,
    ];

    pub fn numeric(self) -> u8 {
        match self {
            SeverityLevel::Critical => 1,
            SeverityLevel::Serious => 2,
            SeverityLevel::Moderate => 3,
            SeverityLevel::Mild => 4,
            SeverityLevel::Healthy => 5,
        }
    }

    pub fn from_numeric(n: u8) -> Option<Self> {
        Self::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SeverityLevel::Critical => "critical",
            SeverityLevel::Serious => "serious",
            SeverityLevel::Moderate => "moderate",
            SeverityLevel::Mild => "mild",
            SeverityLevel::Healthy => "healthy",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SeverityLevel::Critical => "Critical",
            SeverityLevel::Serious => "Serious",
            SeverityLevel::Moderate => "Moderate",
            SeverityLevel::Mild => "Mild",
            SeverityLevel::Healthy => "Healthy",
        }
    }

    /// Rubric text shown to raters next to the severity question.
    pub fn definition(self) -> &'static str {
        match self {
            SeverityLevel::Critical => "Describes a medical condition that poses a threat to a person's life. A critical condition requires urgent care and close monitoring.",
            SeverityLevel::Serious => "Describes a condition that requires medical attention but is not immediately life-threatening. Treatment may involve hospitalization, medication, or other interventions.",
            SeverityLevel::Moderate => "Describes a condition that is not severe but may require medical attention and treatment. The condition may cause discomfort or affect a person\u{2019}s ability to carry out normal activities.",
            SeverityLevel::Mild => "Describes a condition that is not serious. The condition may cause minor discomfort or inconvenience but is unlikely to have a significant impact on a person\u{2019}s overall health.",
            SeverityLevel::Healthy => "Findings that are considered normal or benign with no significant abnormalities.",
        }
    }
}

impl fmt::Display for SeverityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SeverityLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown severity level {s:?}"))
    }
}

/// The four simplification types: baseline (single shot) or self-corrected,
/// each seeded with the plain or the chain-of-thought prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantTag {
    PlainBs,
    PlainSc,
    CotBs,
    CotSc,
}

impl VariantTag {
    /// Column order used by every report table.
    pub const ALL: [VariantTag; 4] = [
        VariantTag::PlainBs,
        VariantTag::PlainSc,
        VariantTag::CotBs,
        VariantTag::CotSc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VariantTag::PlainBs => "plain_bs",
            VariantTag::PlainSc => "plain_sc",
            VariantTag::CotBs => "cot_bs",
            VariantTag::CotSc => "cot_sc",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VariantTag::PlainBs => "Plain_BS",
            VariantTag::PlainSc => "Plain_SC",
            VariantTag::CotBs => "CoT_BS",
            VariantTag::CotSc => "CoT_SC",
        }
    }

    pub fn index(self) -> usize {
        match self {
            VariantTag::PlainBs => 0,
            VariantTag::PlainSc => 1,
            VariantTag::CotBs => 2,
            VariantTag::CotSc => 3,
        }
    }

    pub fn is_self_corrected(self) -> bool {
        matches!(self, VariantTag::PlainSc | VariantTag::CotSc)
    }
}

impl fmt::Display for VariantTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for VariantTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s) || v.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

/// Where a text shown to raters came from: the original sentence or one variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TextSource {
    Original,
    Variant(VariantTag),
}

impl TextSource {
    /// Report column order.
    pub const ALL: [TextSource; 5] = [
        TextSource::Original,
        TextSource::Variant(VariantTag::PlainBs),
        TextSource::Variant(VariantTag::PlainSc),
        TextSource::Variant(VariantTag::CotBs),
        TextSource::Variant(VariantTag::CotSc),
    ];

    pub fn label(self) -> &'static str {
        match self {
            TextSource::Original => "Original",
            TextSource::Variant(v) => v.label(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadiologySentence {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<SeverityLevel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplificationRecord {
    pub sentence_id: String,
    pub variant: VariantTag,
    pub text: String,
    /// Refine rounds performed; always 0 for baseline variants.
    pub iterations: u32,
    pub transcript_ref: String,
}

impl SimplificationRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.text.trim().is_empty() {
            return Err(format!(
                "empty text for {} / {}",
                self.sentence_id, self.variant
            ));
        }
        if !self.variant.is_self_corrected() && self.iterations != 0 {
            return Err(format!(
                "baseline variant {} for {} has iterations = {}",
                self.variant, self.sentence_id, self.iterations
            ));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record on line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate id {id:?} on line {line} (first seen on line {first_line})")]
    DuplicateId {
        id: String,
        line: usize,
        first_line: usize,
    },
    #[error("simplification references unknown sentence {0:?}")]
    DanglingReference(String),
}

impl From<JsonlError> for CorpusError {
    fn from(e: JsonlError) -> Self {
        match e {
            JsonlError::Io(e) => CorpusError::Io(e),
            JsonlError::Malformed { line, message } => CorpusError::Malformed { line, message },
        }
    }
}

pub fn load_corpus(path: &Path) -> Result<Vec<RadiologySentence>, CorpusError> {
    let file = std::fs::File::open(path)?;
    parse_corpus(std::io::BufReader::new(file))
}

/// Parses a corpus stream, validating non-empty text and unique ids.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<RadiologySentence>, CorpusError> {
    let rows: Vec<(usize, RadiologySentence)> = jsonl::read_records(reader)?;
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, sentence) in rows {
        if sentence.id.trim().is_empty() {
            return Err(CorpusError::Malformed {
                line,
                message: "empty id".into(),
            });
        }
        if sentence.text.trim().is_empty() {
            return Err(CorpusError::Malformed {
                line,
                message: format!("sentence {:?} has empty text", sentence.id),
            });
        }
        if let Some(&first_line) = seen.get(&sentence.id) {
            return Err(CorpusError::DuplicateId {
                id: sentence.id,
                line,
                first_line,
            });
        }
        seen.insert(sentence.id.clone(), line);
        out.push(sentence);
    }
    Ok(out)
}

/// The bundled synthetic corpus (12 sentences, no patient data).
pub fn demo_corpus() -> Vec<RadiologySentence> {
    parse_corpus(DEMO_CORPUS.as_bytes()).expect("bundled demo corpus is valid")
}

pub fn save_corpus(sentences: &[RadiologySentence], path: &Path) -> std::io::Result<()> {
    jsonl::write_file(path, sentences)
}

pub fn save_simplifications(records: &[SimplificationRecord], path: &Path) -> std::io::Result<()> {
    jsonl::write_file(path, records)
}

pub fn load_simplifications(path: &Path) -> Result<Vec<SimplificationRecord>, CorpusError> {
    let file = std::fs::File::open(path)?;
    parse_simplifications(std::io::BufReader::new(file))
}

pub fn parse_simplifications<R: BufRead>(
    reader: R,
) -> Result<Vec<SimplificationRecord>, CorpusError> {
    let rows: Vec<(usize, SimplificationRecord)> = jsonl::read_records(reader)?;
    rows.into_iter()
        .map(|(line, rec)| {
            rec.validate()
                .map_err(|message| CorpusError::Malformed { line, message })?;
            Ok(rec)
        })
        .collect()
}

/// Checks that every record points at a sentence in `corpus`.
pub fn check_references(
    corpus: &[RadiologySentence],
    records: &[SimplificationRecord],
) -> Result<(), CorpusError> {
    let ids: std::collections::HashSet<&str> = corpus.iter().map(|s| s.id.as_str()).collect();
    match records.iter().find(|r| !ids.contains(r.sentence_id.as_str())) {
        Some(r) => Err(CorpusError::DanglingReference(r.sentence_id.clone())),
        None => Ok(()),
    }
}

/// Groups records by sentence id, preserving file order within each group.
pub fn group_by_sentence(
    records: &[SimplificationRecord],
) -> BTreeMap<&str, Vec<&SimplificationRecord>> {
    let mut groups: BTreeMap<&str, Vec<&SimplificationRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.sentence_id.as_str()).or_default().push(r);
    }
    groups
}

pub fn severity_histogram(corpus: &[RadiologySentence]) -> BTreeMap<SeverityLevel, usize> {
    let mut counts = BTreeMap::new();
    for level in corpus.iter().filter_map(|s| s.severity) {
        *counts.entry(level).or_insert(0) += 1;
    }
    counts
}
