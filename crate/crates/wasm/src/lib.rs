//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes plain strings or numbers and returns a JSON string, so
//! the functions are callable (and tested) natively as well.

use std::collections::BTreeSet;

use radsimp_core::analytics::{krippendorff_alpha, latin_square_plan, masi_distance, AnalyticsError, Rating};
use radsimp_core::readability::{analyze, score_text};
use radsimp_core::VariantTag;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Text statistics and FKGL/GFI/ARI for `text`.
#[wasm_bindgen]
pub fn readability(text: &str) -> Result<String, String> {
    let stats = analyze(text);
    let scores = score_text(text).map_err(|e| e.to_string())?;
    Ok(json!({
        "stats": stats,
        "fkgl": scores.fkgl,
        "gfi": scores.gfi,
        "ari": scores.ari,
    })
    .to_string())
}

type Label = BTreeSet<VariantTag>;

/// Parses one line per item, one `|`-separated cell per rater. A cell lists
/// variants separated by commas or spaces; `-` or blank means no rating.
fn parse_grid(table: &str) -> Result<Vec<Rating<Label>>, String> {
    let mut ratings = Vec::new();
    for (i, line) in table.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        for (r, cell) in line.split('|').enumerate() {
            let cell = cell.trim();
            if cell.is_empty() || cell == "-" {
                continue;
            }
            let label = cell
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<VariantTag>().map_err(|e| format!("line {}: {e}", i + 1)))
                .collect::<Result<Label, _>>()?;
            ratings.push(Rating {
                item_id: format!("item {}", i + 1),
                rater_id: format!("rater {}", r + 1),
                label,
            });
        }
    }
    Ok(ratings)
}

fn masi(a: &Label, b: &Label) -> f64 {
    masi_distance(a, b).expect("parsed labels are non-empty")
}

/// Krippendorff's alpha with MASI distance over a rating grid, plus the
/// distance of every within-item pair.
#[wasm_bindgen]
pub fn agreement(table: &str) -> Result<String, String> {
    let ratings = parse_grid(table)?;
    let mut pairs = Vec::new();
    for (i, a) in ratings.iter().enumerate() {
        for b in &ratings[i + 1..] {
            if a.item_id == b.item_id {
                pairs.push(json!({
                    "item": a.item_id,
                    "raters": [a.rater_id, b.rater_id],
                    "distance": masi(&a.label, &b.label),
                }));
            }
        }
    }
    let alpha = match krippendorff_alpha(&ratings, masi) {
        Ok(res) => json!({"status": "ok", "result": res}),
        Err(AnalyticsError::PerfectHomogeneity) => {
            json!({"status": "undefined", "reason": "every label is identical"})
        }
        Err(e) => json!({"status": "undefined", "reason": e.to_string()}),
    };
    Ok(json!({"ratings": ratings.len(), "alpha": alpha, "pairs": pairs}).to_string())
}

/// Cyclic assignment of the four variants for `raters` x `sentences`, with
/// per-rater and per-(sentence, variant) counts.
#[wasm_bindgen]
pub fn latin_square(raters: u32, sentences: u32) -> Result<String, String> {
    if raters > 200 || sentences > 500 {
        return Err("at most 200 raters and 500 sentences".into());
    }
    let ids: Vec<String> = (1..=sentences).map(|s| format!("s{s}")).collect();
    let plan = latin_square_plan(raters as usize, &ids, &VariantTag::ALL).map_err(|e| e.to_string())?;
    let rater_counts: Vec<Vec<usize>> = (0..plan.n_raters()).map(|r| plan.rater_counts(r)).collect();
    let pair_counts: Vec<Vec<usize>> = (0..ids.len())
        .map(|s| VariantTag::ALL.iter().map(|&v| plan.pair_count(s, v)).collect())
        .collect();
    let even = |rows: &[Vec<usize>]| {
        rows.iter().flatten().collect::<BTreeSet<_>>().len() == 1
    };
    Ok(json!({
        "variants": VariantTag::ALL.map(VariantTag::label),
        "grid": plan.grid.iter().map(|row| row.iter().map(|v| v.label()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "rater_counts": rater_counts,
        "pair_counts": pair_counts,
        "balanced": even(&rater_counts) && even(&pair_counts),
    })
    .to_string())
}
