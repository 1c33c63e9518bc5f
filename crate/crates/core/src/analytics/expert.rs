use serde::{Deserialize, Serialize};

use super::answers::ExpertRating;
use crate::corpus::VariantTag;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertColumn {
    pub variant: VariantTag,
    pub ratings: usize,
    pub correctness: f64,
    pub completeness: f64,
    pub hallucination: f64,
    pub structure: f64,
    pub simplicity: f64,
}

/// Mean expert Likert scores per variant; variants without ratings are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertTable {
    pub columns: Vec<ExpertColumn>,
}

pub fn expert_aggregates(ratings: &[ExpertRating]) -> ExpertTable {
    let columns = VariantTag::ALL
        .into_iter()
        .filter_map(|v| {
            let group: Vec<&ExpertRating> = ratings.iter().filter(|r| r.variant == v).collect();
            if group.is_empty() {
                return None;
            }
            let n = group.len() as f64;
            let mean = |f: fn(&ExpertRating) -> u8| {
                group.iter().map(|r| f64::from(f(r))).sum::<f64>() / n
            };
            Some(ExpertColumn {
                variant: v,
                ratings: group.len(),
                correctness: mean(|r| r.correctness.get()),
                completeness: mean(|r| r.completeness.get()),
                hallucination: mean(|r| r.hallucination.get()),
                structure: mean(|r| r.structure.get()),
                simplicity: mean(|r| r.simplicity.get()),
            })
        })
        .collect();
    ExpertTable { columns }
}
