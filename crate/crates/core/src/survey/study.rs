use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::questions::{candidate_letter, questions_for};
use super::{Panel, Progress, StudyError};
use crate::analytics::{latin_square_plan, AnswerMaps, AssignmentPlan};
use crate::corpus::{RadiologySentence, SimplificationRecord, VariantTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Expert,
    Layperson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyState {
    Draft,
    #[default]
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaterSpec {
    pub id: String,
    pub role: Role,
    /// Capability token for the invite URL. Derived from the study seed and
    /// `token_salt` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub id: String,
    #[serde(default)]
    pub state: StudyState,
    #[serde(default)]
    pub seed: u64,
    /// Hide variant identity from experts and shuffle their per-sentence order.
    #[serde(default = "yes")]
    pub blind_experts: bool,
    #[serde(default)]
    pub token_salt: String,
    pub raters: Vec<RaterSpec>,
    #[serde(default)]
    pub answer_maps: AnswerMaps,
}

/// One entry in a rater's fixed item sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedItem {
    pub rater_id: String,
    pub item_id: String,
    pub sentence_id: String,
    pub panel: Panel,
    /// The simplification shown (LaySimplified, ExpertRating).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<VariantTag>,
    /// Preference candidates in display order; letter `A` is index 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<VariantTag>,
}

impl PlannedItem {
    /// Variant behind a candidate letter of a preference item.
    pub fn candidate(&self, letter: &str) -> Option<VariantTag> {
        (0..self.candidates.len())
            .find(|&i| candidate_letter(i) == letter)
            .map(|i| self.candidates[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub letter: String,
    pub text: String,
}

/// What a rater is shown. Variant identity is never included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyItem {
    pub study_id: String,
    pub rater_id: String,
    pub item_id: String,
    pub panel: Panel,
    pub sentence_id: String,
    pub sentence: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplification: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<Candidate>,
    pub questions: Vec<super::Question>,
    pub progress: Progress,
}

/// A study definition with every rater's item sequence precomputed.
#[derive(Debug, Clone)]
pub struct Study {
    config: StudyConfig,
    sentences: Vec<RadiologySentence>,
    simplifications: Vec<SimplificationRecord>,
    texts: BTreeMap<(String, VariantTag), String>,
    plan: Option<AssignmentPlan>,
    plan_raters: Vec<String>,
    sequences: BTreeMap<String, Vec<PlannedItem>>,
    tokens: BTreeMap<String, String>,
    rater_tokens: BTreeMap<String, String>,
}

fn derive_token(config: &StudyConfig, rater: &str) -> String {
    let mut h = Sha256::new();
    h.update(b"radsimp-token\0");
    h.update(config.id.as_bytes());
    h.update(b"\0");
    h.update(config.token_salt.as_bytes());
    h.update(b"\0");
    h.update(config.seed.to_le_bytes());
    h.update(rater.as_bytes());
    hex::encode(&h.finalize()[..12])
}

/// Seeded generator for one (purpose, rater, sentence) draw, independent of
/// the order in which draws happen.
fn rng_for(seed: u64, purpose: &str, rater: &str, sentence: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for part in [purpose, rater, sentence] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

pub fn preference_order(seed: u64, rater: &str, sentence: &str) -> Vec<VariantTag> {
    let mut order = VariantTag::ALL.to_vec();
    order.shuffle(&mut rng_for(seed, "preference", rater, sentence));
    order
}

pub fn expert_order(seed: u64, rater: &str, sentence: &str) -> Vec<VariantTag> {
    let mut order = VariantTag::ALL.to_vec();
    order.shuffle(&mut rng_for(seed, "expert", rater, sentence));
    order
}

impl Study {
    pub fn new(
        config: StudyConfig,
        sentences: Vec<RadiologySentence>,
        simplifications: Vec<SimplificationRecord>,
    ) -> Result<Self, StudyError> {
        let invalid = |m: String| Err(StudyError::Invalid(m));
        if config.id.trim().is_empty() {
            return invalid("study id is empty".into());
        }
        if config.raters.is_empty() {
            return invalid("roster is empty".into());
        }
        if sentences.is_empty() {
            return invalid("corpus is empty".into());
        }
        config
            .answer_maps
            .validate()
            .map_err(StudyError::Invalid)?;

        let mut seen_ids = BTreeSet::new();
        for s in &sentences {
            if !seen_ids.insert(s.id.as_str()) {
                return invalid(format!("duplicate sentence id {:?}", s.id));
            }
        }
        let mut texts = BTreeMap::new();
        for r in &simplifications {
            if !seen_ids.contains(r.sentence_id.as_str()) {
                return invalid(format!("simplification for unknown sentence {:?}", r.sentence_id));
            }
            if texts
                .insert((r.sentence_id.clone(), r.variant), r.text.clone())
                .is_some()
            {
                return invalid(format!(
                    "two {} simplifications for {:?}",
                    r.variant.label(),
                    r.sentence_id
                ));
            }
        }
        for s in &sentences {
            for v in VariantTag::ALL {
                if !texts.contains_key(&(s.id.clone(), v)) {
                    return invalid(format!("sentence {:?} has no {} simplification", s.id, v.label()));
                }
            }
        }

        let mut tokens = BTreeMap::new();
        let mut rater_tokens = BTreeMap::new();
        for r in &config.raters {
            if r.id.trim().is_empty() {
                return invalid("rater id is empty".into());
            }
            let token = r.token.clone().unwrap_or_else(|| derive_token(&config, &r.id));
            if token.is_empty() {
                return invalid(format!("rater {:?} has an empty token", r.id));
            }
            if rater_tokens.insert(r.id.clone(), token.clone()).is_some() {
                return invalid(format!("duplicate rater id {:?}", r.id));
            }
            if tokens.insert(token, r.id.clone()).is_some() {
                return invalid(format!("rater {:?} reuses another rater's token", r.id));
            }
        }

        let sentence_ids: Vec<String> = sentences.iter().map(|s| s.id.clone()).collect();
        let plan_raters: Vec<String> = config
            .raters
            .iter()
            .filter(|r| r.role == Role::Layperson)
            .map(|r| r.id.clone())
            .collect();
        let plan = if plan_raters.is_empty() {
            None
        } else {
            Some(
                latin_square_plan(plan_raters.len(), &sentence_ids, &VariantTag::ALL)
                    .map_err(|e| StudyError::Invalid(e.to_string()))?,
            )
        };

        let mut sequences = BTreeMap::new();
        for r in &config.raters {
            let mut items = Vec::new();
            match r.role {
                Role::Layperson => {
                    let row = plan_raters.iter().position(|x| x == &r.id).expect("in plan");
                    let plan = plan.as_ref().expect("plan exists when laypeople exist");
                    for (s, sid) in sentence_ids.iter().enumerate() {
                        let base = PlannedItem {
                            rater_id: r.id.clone(),
                            item_id: String::new(),
                            sentence_id: sid.clone(),
                            panel: Panel::LayOriginal,
                            variant: None,
                            candidates: Vec::new(),
                        };
                        items.push(PlannedItem {
                            item_id: format!("{sid}:orig"),
                            ..base.clone()
                        });
                        items.push(PlannedItem {
                            item_id: format!("{sid}:simp"),
                            panel: Panel::LaySimplified,
                            variant: Some(plan.variant(row, s)),
                            ..base.clone()
                        });
                        items.push(PlannedItem {
                            item_id: format!("{sid}:pref"),
                            panel: Panel::LayPreference,
                            candidates: preference_order(config.seed, &r.id, sid),
                            ..base
                        });
                    }
                }
                Role::Expert => {
                    for sid in &sentence_ids {
                        let order = if config.blind_experts {
                            expert_order(config.seed, &r.id, sid)
                        } else {
                            VariantTag::ALL.to_vec()
                        };
                        for (k, v) in order.into_iter().enumerate() {
                            let item_id = if config.blind_experts {
                                format!("{sid}:rate{}", k + 1)
                            } else {
                                format!("{sid}:{}", v.as_str())
                            };
                            items.push(PlannedItem {
                                rater_id: r.id.clone(),
                                item_id,
                                sentence_id: sid.clone(),
                                panel: Panel::ExpertRating,
                                variant: Some(v),
                                candidates: Vec::new(),
                            });
                        }
                    }
                }
            }
            sequences.insert(r.id.clone(), items);
        }

        Ok(Self {
            config,
            sentences,
            simplifications,
            texts,
            plan,
            plan_raters,
            sequences,
            tokens,
            rater_tokens,
        })
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn state(&self) -> StudyState {
        self.config.state
    }

    pub fn set_state(&mut self, state: StudyState) {
        self.config.state = state;
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn sentences(&self) -> &[RadiologySentence] {
        &self.sentences
    }

    pub fn simplifications(&self) -> &[SimplificationRecord] {
        &self.simplifications
    }

    /// Latin-square plan over the laypeople, in roster order.
    pub fn plan(&self) -> Option<&AssignmentPlan> {
        self.plan.as_ref()
    }

    pub fn plan_raters(&self) -> &[String] {
        &self.plan_raters
    }

    pub fn rater(&self, rater_id: &str) -> Option<&RaterSpec> {
        self.config.raters.iter().find(|r| r.id == rater_id)
    }

    pub fn rater_for_token(&self, token: &str) -> Option<&str> {
        self.tokens.get(token).map(String::as_str)
    }

    pub fn token_for(&self, rater_id: &str) -> Option<&str> {
        self.rater_tokens.get(rater_id).map(String::as_str)
    }

    pub fn sequence(&self, rater_id: &str) -> Option<&[PlannedItem]> {
        self.sequences.get(rater_id).map(Vec::as_slice)
    }

    /// Every planned item of every rater, in roster order.
    pub fn all_items(&self) -> Vec<PlannedItem> {
        self.config
            .raters
            .iter()
            .flat_map(|r| self.sequences[&r.id].iter().cloned())
            .collect()
    }

    pub fn text(&self, sentence_id: &str, variant: VariantTag) -> Option<&str> {
        self.texts
            .get(&(sentence_id.to_string(), variant))
            .map(String::as_str)
    }

    fn sentence_text(&self, sentence_id: &str) -> &str {
        self.sentences
            .iter()
            .find(|s| s.id == sentence_id)
            .map(|s| s.text.as_str())
            .unwrap_or_default()
    }

    pub fn questions(&self, item: &PlannedItem) -> Vec<super::Question> {
        questions_for(item.panel, &self.config.answer_maps, item.candidates.len())
    }

    /// The rater-facing view of one planned item.
    pub fn render_item(&self, item: &PlannedItem, progress: Progress) -> SurveyItem {
        let simplification = match item.panel {
            Panel::LaySimplified | Panel::ExpertRating => item
                .variant
                .and_then(|v| self.text(&item.sentence_id, v))
                .map(str::to_string),
            _ => None,
        };
        let candidates = item
            .candidates
            .iter()
            .enumerate()
            .map(|(i, &v)| Candidate {
                letter: candidate_letter(i),
                text: self.text(&item.sentence_id, v).unwrap_or_default().to_string(),
            })
            .collect();
        SurveyItem {
            study_id: self.config.id.clone(),
            rater_id: item.rater_id.clone(),
            item_id: item.item_id.clone(),
            panel: item.panel,
            sentence_id: item.sentence_id.clone(),
            sentence: self.sentence_text(&item.sentence_id).to_string(),
            simplification,
            candidates,
            questions: self.questions(item),
            progress,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::demo_corpus;

    pub(crate) fn demo_records(corpus: &[RadiologySentence]) -> Vec<SimplificationRecord> {
        corpus
            .iter()
            .flat_map(|s| {
                VariantTag::ALL.into_iter().map(move |v| SimplificationRecord {
                    sentence_id: s.id.clone(),
                    variant: v,
                    text: format!("{} in plain words, version {}", s.id, v.index()),
                    iterations: 0,
                    transcript_ref: String::new(),
                })
            })
            .collect()
    }

    fn config(laypeople: usize, experts: usize) -> StudyConfig {
        let mut raters = Vec::new();
        for i in 0..laypeople {
            raters.push(RaterSpec {
                id: format!("lay{i}"),
                role: Role::Layperson,
                token: None,
            });
        }
        for i in 0..experts {
            raters.push(RaterSpec {
                id: format!("rad{i}"),
                role: Role::Expert,
                token: None,
            });
        }
        StudyConfig {
            id: "t".into(),
            state: StudyState::Open,
            seed: 11,
            blind_experts: true,
            token_salt: String::new(),
            raters,
            answer_maps: AnswerMaps::default(),
        }
    }

    #[test]
    fn sequences_follow_panel_order_and_plan() {
        let corpus = demo_corpus();
        let study = Study::new(config(4, 1), corpus.clone(), demo_records(&corpus)).unwrap();
        let seq = study.sequence("lay1").unwrap();
        assert_eq!(seq.len(), corpus.len() * 3);
        assert_eq!(seq[0].panel, Panel::LayOriginal);
        assert_eq!(seq[1].panel, Panel::LaySimplified);
        assert_eq!(seq[2].panel, Panel::LayPreference);
        let plan = study.plan().unwrap();
        for (s, chunk) in seq.chunks(3).enumerate() {
            assert_eq!(chunk[1].variant, Some(plan.variant(1, s)));
            let mut c = chunk[2].candidates.clone();
            c.sort();
            assert_eq!(c, VariantTag::ALL.to_vec());
        }
        let expert = study.sequence("rad0").unwrap();
        assert_eq!(expert.len(), corpus.len() * 4);
        assert!(expert.iter().all(|i| !i.item_id.contains("plain") && !i.item_id.contains("cot")));
    }

    #[test]
    fn orders_are_seeded() {
        assert_eq!(preference_order(1, "a", "s"), preference_order(1, "a", "s"));
        let distinct: BTreeSet<Vec<VariantTag>> =
            (0..50).map(|i| preference_order(i, "a", "s")).collect();
        assert!(distinct.len() > 1);
    }

    #[test]
    fn tokens_are_unique_and_resolvable() {
        let corpus = demo_corpus();
        let study = Study::new(config(3, 1), corpus.clone(), demo_records(&corpus)).unwrap();
        for r in ["lay0", "lay1", "lay2", "rad0"] {
            let t = study.token_for(r).unwrap();
            assert_eq!(study.rater_for_token(t), Some(r));
        }
    }

    #[test]
    fn missing_variant_is_rejected() {
        let corpus = demo_corpus();
        let mut records = demo_records(&corpus);
        records.pop();
        assert!(Study::new(config(1, 0), corpus, records).is_err());
    }

    #[test]
    fn rendered_item_hides_variant() {
        let corpus = demo_corpus();
        let study = Study::new(config(1, 0), corpus.clone(), demo_records(&corpus)).unwrap();
        let item = &study.sequence("lay0").unwrap()[2];
        let view = study.render_item(item, Progress { done: 2, total: 36 });
        assert_eq!(view.candidates.len(), 4);
        assert_eq!(view.candidates[0].letter, "A");
        let json = serde_json::to_string(&view).unwrap();
        assert!(!json.contains("plain_bs") && !json.contains("cot_sc"));
    }
}
