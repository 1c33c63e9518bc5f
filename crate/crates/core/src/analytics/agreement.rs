//! Krippendorff's alpha over arbitrary labels with a pluggable distance, and
//! the MASI set distance used for multi-select preference answers.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::answers::LaypersonResponse;
use super::votes::PreferenceKind;
use super::AnalyticsError;
use crate::corpus::VariantTag;

/// MASI distance: `1 - J * M`, where `J` is the Jaccard index and `M` is 1 for
/// equal sets, 2/3 when one strictly contains the other, 1/3 for overlapping
/// sets where neither contains the other and 0 for disjoint sets.
pub fn masi_distance<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Result<f64, AnalyticsError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalyticsError::EmptySet);
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    let monotonicity = if inter == 0 {
        0.0
    } else if a == b {
        1.0
    } else if inter == a.len() || inter == b.len() {
        2.0 / 3.0
    } else {
        1.0 / 3.0
    };
    Ok(1.0 - (inter as f64 / union as f64) * monotonicity)
}

/// Squared difference, the usual distance for interval data.
pub fn interval_distance(a: &f64, b: &f64) -> f64 {
    (a - b) * (a - b)
}

pub fn nominal_distance<T: PartialEq>(a: &T, b: &T) -> f64 {
    if a == b {
        0.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating<T> {
    pub item_id: String,
    pub rater_id: String,
    pub label: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub alpha: f64,
    pub observed_disagreement: f64,
    pub expected_disagreement: f64,
    /// Values in items with at least two ratings.
    pub pairable_values: usize,
    pub items: usize,
}

/// Krippendorff's alpha from the coincidence matrix.
///
/// Items with a single rating are dropped. `distance` is used as given, so
/// callers pass an already-squared metric where that convention applies
/// (see [`interval_distance`]); MASI is used unsquared. The distance must be
/// zero on identical labels.
pub fn krippendorff_alpha<T, F>(ratings: &[Rating<T>], distance: F) -> Result<AlphaResult, AnalyticsError>
where
    T: Ord + Clone,
    F: Fn(&T, &T) -> f64,
{
    // distinct labels, in label order
    let labels: Vec<&T> = ratings
        .iter()
        .map(|r| &r.label)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&T, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let k = labels.len();

    let mut units: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for r in ratings {
        units
            .entry(r.item_id.as_str())
            .or_default()
            .push(index[&r.label]);
    }

    // o[c][k] = sum over items of (ordered c-k pairs within the item) / (m - 1)
    let mut coincidence = vec![vec![0.0f64; k]; k];
    let mut items = 0;
    for values in units.values() {
        let m = values.len();
        if m < 2 {
            continue;
        }
        items += 1;
        let mut counts = vec![0usize; k];
        for &v in values {
            counts[v] += 1;
        }
        let w = 1.0 / (m - 1) as f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for d in 0..k {
                let pairs = if c == d {
                    counts[c] * (counts[c] - 1)
                } else {
                    counts[c] * counts[d]
                };
                if pairs > 0 {
                    coincidence[c][d] += pairs as f64 * w;
                }
            }
        }
    }

    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    let n_values = n.round() as usize;
    if items == 0 || n_values < 2 {
        return Err(AnalyticsError::InsufficientData(
            "need at least one item with two or more ratings".into(),
        ));
    }

    let mut delta = vec![vec![0.0f64; k]; k];
    for c in 0..k {
        for d in 0..k {
            delta[c][d] = distance(labels[c], labels[d]);
        }
    }

    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            observed += coincidence[c][d] * delta[c][d];
            let pairs = if c == d {
                marginals[c] * (marginals[c] - 1.0)
            } else {
                marginals[c] * marginals[d]
            };
            expected += pairs * delta[c][d];
        }
    }
    let observed = observed / n;
    let expected = expected / (n * (n - 1.0));
    if expected <= 0.0 {
        return Err(AnalyticsError::PerfectHomogeneity);
    }
    Ok(AlphaResult {
        alpha: 1.0 - observed / expected,
        observed_disagreement: observed,
        expected_disagreement: expected,
        pairable_values: n_values,
        items,
    })
}

/// Ratings for alpha: one item per sentence, one label per rater (their set of
/// most or least preferred variants). Empty sets are skipped.
pub fn preference_ratings(
    responses: &[LaypersonResponse],
    kind: PreferenceKind,
) -> Vec<Rating<BTreeSet<VariantTag>>> {
    responses
        .iter()
        .filter(|r| !r.preference(kind).is_empty())
        .map(|r| Rating {
            item_id: r.sentence_id.clone(),
            rater_id: r.rater_id.clone(),
            label: r.preference(kind).clone(),
        })
        .collect()
}

/// Alpha with MASI distance over the most- or least-preferred sets.
pub fn preference_alpha(
    responses: &[LaypersonResponse],
    kind: PreferenceKind,
) -> Result<AlphaResult, AnalyticsError> {
    let ratings = preference_ratings(responses, kind);
    krippendorff_alpha(&ratings, |a, b| {
        masi_distance(a, b).expect("preference sets are non-empty")
    })
}
