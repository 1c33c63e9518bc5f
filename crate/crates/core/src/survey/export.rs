//! The study export: one header line describing the study (roster, plan,
//! every planned item with its candidate order and hidden variant) followed
//! by the accepted events in log order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::answers::{validate_answers, PanelAnswers};
use super::progress::AcceptedEvent;
use super::questions::questions_for;
use super::study::{PlannedItem, Role, Study, StudyState};
use super::Panel;
use crate::analytics::{AnswerMaps, AssignmentPlan, ExpertRating, LaypersonResponse};
use crate::corpus::{RadiologySentence, SimplificationRecord};
use crate::jsonl::{self, JsonlError};

pub const EXPORT_FORMAT: &str = "radsimp-survey-export";
pub const EXPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub id: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportHeader {
    pub format: String,
    pub version: u32,
    pub study_id: String,
    pub state: StudyState,
    pub seed: u64,
    pub blind_experts: bool,
    pub roster: Vec<RosterEntry>,
    pub sentences: Vec<RadiologySentence>,
    pub simplifications: Vec<SimplificationRecord>,
    pub plan: Option<AssignmentPlan>,
    /// Row order of `plan`.
    pub plan_raters: Vec<String>,
    pub items: Vec<PlannedItem>,
    pub answer_maps: AnswerMaps,
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExportLine {
    Header(Box<ExportHeader>),
    Event(AcceptedEvent),
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("export has no header line")]
    MissingHeader,
    #[error("unsupported export format {0}")]
    UnsupportedFormat(String),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("header announces {expected} events, found {found}")]
    CountMismatch { expected: usize, found: usize },
}

impl From<JsonlError> for ExportError {
    fn from(e: JsonlError) -> Self {
        match e {
            JsonlError::Io(e) => ExportError::Io(e),
            JsonlError::Malformed { line, message } => ExportError::Malformed { line, message },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyExport {
    pub header: ExportHeader,
    pub events: Vec<AcceptedEvent>,
}

impl SurveyExport {
    pub fn from_study(study: &Study, events: &[AcceptedEvent]) -> Self {
        let config = study.config();
        Self {
            header: ExportHeader {
                format: EXPORT_FORMAT.into(),
                version: EXPORT_VERSION,
                study_id: config.id.clone(),
                state: config.state,
                seed: config.seed,
                blind_experts: config.blind_experts,
                roster: config
                    .raters
                    .iter()
                    .map(|r| RosterEntry {
                        id: r.id.clone(),
                        role: r.role,
                    })
                    .collect(),
                sentences: study.sentences().to_vec(),
                simplifications: study.simplifications().to_vec(),
                plan: study.plan().cloned(),
                plan_raters: study.plan_raters().to_vec(),
                items: study.all_items(),
                answer_maps: config.answer_maps.clone(),
                events: events.len(),
            },
            events: events.to_vec(),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = ExportLine::Header(Box::new(self.header.clone()));
        w.write_all(jsonl::to_line(&header).as_bytes())?;
        for e in &self.events {
            w.write_all(jsonl::to_line(&ExportLine::Event(e.clone())).as_bytes())?;
        }
        w.flush()
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    /// Parses and fully validates an export.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, ExportError> {
        let lines: Vec<(usize, ExportLine)> = jsonl::read_records(reader)?;
        let mut iter = lines.into_iter();
        let header = match iter.next() {
            Some((_, ExportLine::Header(h))) => *h,
            Some((line, ExportLine::Event(_))) => {
                return Err(ExportError::Schema {
                    line,
                    message: "first record must be the header".into(),
                })
            }
            None => return Err(ExportError::MissingHeader),
        };
        if header.format != EXPORT_FORMAT || header.version != EXPORT_VERSION {
            return Err(ExportError::UnsupportedFormat(format!(
                "{} v{}",
                header.format, header.version
            )));
        }
        let mut events = Vec::new();
        for (line, record) in iter {
            match record {
                ExportLine::Event(e) => events.push((line, e)),
                ExportLine::Header(_) => {
                    return Err(ExportError::Schema {
                        line,
                        message: "second header".into(),
                    })
                }
            }
        }
        if events.len() != header.events {
            return Err(ExportError::CountMismatch {
                expected: header.events,
                found: events.len(),
            });
        }
        let export = Self {
            header,
            events: Vec::new(),
        };
        export.check_events(&events)?;
        Ok(Self {
            events: events.into_iter().map(|(_, e)| e).collect(),
            ..export
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ExportError> {
        let file = std::fs::File::open(path)?;
        Self::parse(std::io::BufReader::new(file))
    }

    fn item_index(&self) -> HashMap<(&str, &str), (usize, &PlannedItem)> {
        let mut positions: HashMap<&str, usize> = HashMap::new();
        self.header
            .items
            .iter()
            .map(|item| {
                let p = positions.entry(item.rater_id.as_str()).or_insert(0);
                let pos = *p;
                *p += 1;
                ((item.rater_id.as_str(), item.item_id.as_str()), (pos, item))
            })
            .collect()
    }

    fn typed_answers(&self, item: &PlannedItem, e: &AcceptedEvent) -> Result<PanelAnswers, String> {
        let questions = questions_for(item.panel, &self.header.answer_maps, item.candidates.len());
        validate_answers(item.panel, &questions, &e.answers).map_err(|err| err.to_string())
    }

    /// Same rules the service enforces: sequential numbering, unique event
    /// ids, each rater's items answered in plan order, answers match schema.
    fn check_events(&self, events: &[(usize, AcceptedEvent)]) -> Result<(), ExportError> {
        let index = self.item_index();
        let mut answered: HashMap<&str, usize> = HashMap::new();
        let mut ids = HashSet::new();
        for (n, (line, e)) in events.iter().enumerate() {
            let fail = |message: String| ExportError::Schema {
                line: *line,
                message,
            };
            if e.seq != n as u64 + 1 {
                return Err(fail(format!("sequence number {} out of order", e.seq)));
            }
            if !ids.insert(e.event_id.as_str()) {
                return Err(fail(format!("event id {:?} repeated", e.event_id)));
            }
            let (pos, item) = index
                .get(&(e.rater_id.as_str(), e.item_id.as_str()))
                .ok_or_else(|| fail(format!("unknown item {:?} for rater {:?}", e.item_id, e.rater_id)))?;
            let done = answered.entry(e.rater_id.as_str()).or_insert(0);
            if *pos != *done {
                return Err(fail(format!("item {:?} answered out of sequence", e.item_id)));
            }
            *done += 1;
            self.typed_answers(item, e).map_err(fail)?;
        }
        Ok(())
    }

    /// Expert severity labels recorded on the corpus sentences, if any.
    pub fn corpus_labels(&self) -> BTreeMap<String, crate::corpus::SeverityLevel> {
        self.header
            .sentences
            .iter()
            .filter_map(|s| s.severity.map(|l| (s.id.clone(), l)))
            .collect()
    }

    /// Layperson answers merged per (rater, sentence) and expert ratings with
    /// blinded items mapped back to variants.
    pub fn responses(&self) -> (Vec<LaypersonResponse>, Vec<ExpertRating>) {
        let index = self.item_index();
        let assigned: HashMap<(&str, &str), _> = self
            .header
            .items
            .iter()
            .filter(|i| i.panel == Panel::LaySimplified)
            .filter_map(|i| i.variant.map(|v| ((i.rater_id.as_str(), i.sentence_id.as_str()), v)))
            .collect();
        let mut lay: BTreeMap<(String, String), LaypersonResponse> = BTreeMap::new();
        let mut experts = Vec::new();
        for e in &self.events {
            let (_, item) = index[&(e.rater_id.as_str(), e.item_id.as_str())];
            let answers = self
                .typed_answers(item, e)
                .expect("answers were validated when the export was parsed");
            if let PanelAnswers::Expert(a) = &answers {
                experts.push(ExpertRating {
                    rater_id: e.rater_id.clone(),
                    sentence_id: item.sentence_id.clone(),
                    variant: item.variant.expect("expert items carry a variant"),
                    correctness: a.correctness,
                    completeness: a.completeness,
                    hallucination: a.hallucination,
                    structure: a.structure,
                    simplicity: a.simplicity,
                    severity: a.severity,
                    justification: a.joined_justification(),
                });
                continue;
            }
            let variant = assigned[&(e.rater_id.as_str(), item.sentence_id.as_str())];
            let r = lay
                .entry((e.rater_id.clone(), item.sentence_id.clone()))
                .or_insert_with(|| LaypersonResponse::new(&e.rater_id, &item.sentence_id, variant));
            match answers {
                PanelAnswers::Original(a) => {
                    r.q1_orig = Some(a.q1);
                    r.q2_orig = Some(a.q2);
                    r.q3_orig = Some(a.q3);
                }
                PanelAnswers::Simplified(a) => {
                    r.q1_simp = Some(a.q1);
                    r.q2_simp = Some(a.q2);
                    r.q3_simp = Some(a.q3);
                    r.q4 = Some(a.q4);
                }
                PanelAnswers::Preference(a) => {
                    let map = |letters: &std::collections::BTreeSet<String>| {
                        letters
                            .iter()
                            .map(|l| item.candidate(l).expect("letters were validated"))
                            .collect()
                    };
                    r.most_preferred = map(&a.most_preferred);
                    r.least_preferred = map(&a.least_preferred);
                    r.justification = a.justification;
                }
                PanelAnswers::Expert(_) => unreachable!(),
            }
        }
        (lay.into_values().collect(), experts)
    }
}
