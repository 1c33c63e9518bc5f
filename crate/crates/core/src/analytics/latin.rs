//! Cyclic Latin-square assignment of variants to (rater, sentence) pairs.

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::corpus::VariantTag;

/// `grid[r][s]` is the variant rater `r` sees for sentence `s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub sentences: Vec<String>,
    pub variants: Vec<VariantTag>,
    pub grid: Vec<Vec<VariantTag>>,
}

/// `variant(r, s) = variants[(r + s) mod |variants|]`.
///
/// Rows and columns are exactly balanced when `|variants|` divides both the
/// rater count and the sentence count.
pub fn latin_square_plan(
    n_raters: usize,
    sentences: &[String],
    variants: &[VariantTag],
) -> Result<AssignmentPlan, AnalyticsError> {
    if n_raters == 0 || sentences.is_empty() || variants.is_empty() {
        return Err(AnalyticsError::InsufficientData(
            "Latin-square plan needs raters, sentences and variants".into(),
        ));
    }
    let k = variants.len();
    let grid = (0..n_raters)
        .map(|r| (0..sentences.len()).map(|s| variants[(r + s) % k]).collect())
        .collect();
    Ok(AssignmentPlan {
        sentences: sentences.to_vec(),
        variants: variants.to_vec(),
        grid,
    })
}

impl AssignmentPlan {
    pub fn n_raters(&self) -> usize {
        self.grid.len()
    }

    pub fn variant(&self, rater: usize, sentence: usize) -> VariantTag {
        self.grid[rater][sentence]
    }

    pub fn variant_for(&self, rater: usize, sentence_id: &str) -> Option<VariantTag> {
        let s = self.sentences.iter().position(|x| x == sentence_id)?;
        self.grid.get(rater).map(|row| row[s])
    }

    /// How often each variant (in `self.variants` order) appears in a rater's row.
    pub fn rater_counts(&self, rater: usize) -> Vec<usize> {
        self.variants
            .iter()
            .map(|v| self.grid[rater].iter().filter(|x| *x == v).count())
            .collect()
    }

    /// How many raters see `variant` for the sentence at index `sentence`.
    pub fn pair_count(&self, sentence: usize, variant: VariantTag) -> usize {
        self.grid.iter().filter(|row| row[sentence] == variant).count()
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:<10}", "rater");
        for s in &self.sentences {
            out.push_str(&format!(" {s:>10}"));
        }
        out.push('\n');
        for (r, row) in self.grid.iter().enumerate() {
            out.push_str(&format!("{:<10}", r));
            for v in row {
                out.push_str(&format!(" {:>10}", v.label()));
            }
            out.push('\n');
        }
        out
    }
}
