//! Most/least preferred tallies and per-sentence majority winners.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::answers::LaypersonResponse;
use super::AnalyticsError;
use crate::corpus::VariantTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceKind {
    Most,
    Least,
}

impl PreferenceKind {
    pub fn label(self) -> &'static str {
        match self {
            PreferenceKind::Most => "most",
            PreferenceKind::Least => "least",
        }
    }
}

impl LaypersonResponse {
    pub fn preference(&self, kind: PreferenceKind) -> &std::collections::BTreeSet<VariantTag> {
        match kind {
            PreferenceKind::Most => &self.most_preferred,
            PreferenceKind::Least => &self.least_preferred,
        }
    }
}

/// Raw votes for one sentence, indexed by [`VariantTag::index`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceVotes {
    pub sentence_id: String,
    pub raters: usize,
    pub most: [u32; 4],
    pub least: [u32; 4],
    pub most_winners: Vec<VariantTag>,
    pub least_winners: Vec<VariantTag>,
}

/// Number of sentences each variant won, plus the per-sentence detail.
///
/// When several variants tie for the top count on a sentence, each of them is
/// credited, so a row can total more than the number of sentences. Such
/// sentences are listed in `*_ties`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityVotes {
    pub sentences: usize,
    pub most: [u32; 4],
    pub least: [u32; 4],
    pub most_ties: Vec<String>,
    pub least_ties: Vec<String>,
    pub per_sentence: Vec<SentenceVotes>,
}

fn winners(counts: &[u32; 4]) -> Vec<VariantTag> {
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Vec::new();
    }
    VariantTag::ALL
        .into_iter()
        .filter(|v| counts[v.index()] == max)
        .collect()
}

pub fn majority_votes(responses: &[LaypersonResponse]) -> Result<MajorityVotes, AnalyticsError> {
    let mut by_sentence: BTreeMap<&str, Vec<&LaypersonResponse>> = BTreeMap::new();
    for r in responses {
        by_sentence.entry(r.sentence_id.as_str()).or_default().push(r);
    }
    let mut out = MajorityVotes {
        sentences: by_sentence.len(),
        most: [0; 4],
        least: [0; 4],
        most_ties: Vec::new(),
        least_ties: Vec::new(),
        per_sentence: Vec::with_capacity(by_sentence.len()),
    };
    for (sentence_id, group) in by_sentence {
        let mut most = [0u32; 4];
        let mut least = [0u32; 4];
        for r in &group {
            for v in &r.most_preferred {
                most[v.index()] += 1;
            }
            for v in &r.least_preferred {
                least[v.index()] += 1;
            }
        }
        let most_winners = winners(&most);
        let least_winners = winners(&least);
        if most_winners.is_empty() || least_winners.is_empty() {
            return Err(AnalyticsError::NoPreferenceData(sentence_id.to_string()));
        }
        for v in &most_winners {
            out.most[v.index()] += 1;
        }
        for v in &least_winners {
            out.least[v.index()] += 1;
        }
        if most_winners.len() > 1 {
            out.most_ties.push(sentence_id.to_string());
        }
        if least_winners.len() > 1 {
            out.least_ties.push(sentence_id.to_string());
        }
        out.per_sentence.push(SentenceVotes {
            sentence_id: sentence_id.to_string(),
            raters: group.len(),
            most,
            least,
            most_winners,
            least_winners,
        });
    }
    Ok(out)
}

impl MajorityVotes {
    /// For each variant: `hist[k]` = number of sentences on which exactly `k`
    /// raters picked it. Length is the largest rater count plus one.
    pub fn vote_histogram(&self, kind: PreferenceKind) -> BTreeMap<VariantTag, Vec<usize>> {
        let width = self.per_sentence.iter().map(|s| s.raters).max().unwrap_or(0) + 1;
        let mut out: BTreeMap<VariantTag, Vec<usize>> = VariantTag::ALL
            .into_iter()
            .map(|v| (v, vec![0; width]))
            .collect();
        for s in &self.per_sentence {
            let counts = match kind {
                PreferenceKind::Most => &s.most,
                PreferenceKind::Least => &s.least,
            };
            for v in VariantTag::ALL {
                out.get_mut(&v).expect("all variants present")[counts[v.index()] as usize] += 1;
            }
        }
        out
    }
}
