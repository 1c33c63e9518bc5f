//! Reference-free readability: Flesch-Kincaid Grade Level, Gunning Fog Index
//! and Automated Readability Index.
//!
//! Tokenization rules:
//!
//! * a sentence ends at a run of `.`, `!` or `?` followed by whitespace or the
//!   end of the text; text without a terminator is one sentence; segments with
//!   no words are not counted;
//! * a word is a maximal run of letters, digits and apostrophes containing at
//!   least one letter or digit;
//! * characters are the letters and digits inside words;
//! * syllables are vowel groups (`aeiouy`), minus a silent trailing `e` unless
//!   the word ends in consonant + `le`, with a floor of one per word;
//! * a complex word has three or more syllables, with no exemptions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{RadiologySentence, SimplificationRecord, TextSource};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextStats {
    pub sentences: usize,
    pub words: usize,
    pub syllables: usize,
    pub characters: usize,
    pub complex_words: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReadabilityError {
    #[error("text has no sentences or no words")]
    Degenerate,
    #[error("no texts in group {0}")]
    EmptyGroup(String),
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_apostrophe(c)
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Heuristic syllable count for one word. Always at least 1.
pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    let mut groups: usize = 0;
    let mut in_group = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    let n = letters.len();
    if n >= 1 && letters[n - 1] == 'e' {
        let consonant_le = n >= 3 && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
        if !consonant_le {
            groups = groups.saturating_sub(1);
        }
    }
    groups.max(1)
}

/// Splits `text` into words per the module rules.
pub fn words(text: &str) -> Vec<&str> {
    text.split(|c: char| !is_word_char(c))
        .filter(|w| w.chars().any(char::is_alphanumeric))
        .collect()
}

fn count_sentences(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut segment_has_word = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_alphanumeric() {
            segment_has_word = true;
            i += 1;
        } else if matches!(c, '.' | '!' | '?') {
            let mut j = i;
            while j < chars.len() && matches!(chars[j], '.' | '!' | '?') {
                j += 1;
            }
            if j == chars.len() || chars[j].is_whitespace() {
                if segment_has_word {
                    count += 1;
                }
                segment_has_word = false;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    if segment_has_word {
        count += 1;
    }
    count
}

pub fn analyze(text: &str) -> TextStats {
    let ws = words(text);
    let mut stats = TextStats {
        sentences: count_sentences(text),
        words: ws.len(),
        ..Default::default()
    };
    for w in ws {
        let syl = count_syllables(w);
        stats.syllables += syl;
        stats.characters += w.chars().filter(|c| c.is_alphanumeric()).count();
        if syl >= 3 {
            stats.complex_words += 1;
        }
    }
    stats
}

fn ratios(stats: &TextStats) -> Result<(f64, f64), ReadabilityError> {
    if stats.sentences == 0 || stats.words == 0 {
        return Err(ReadabilityError::Degenerate);
    }
    let words = stats.words as f64;
    Ok((words / stats.sentences as f64, words))
}

/// Flesch-Kincaid Grade Level.
pub fn fkgl(stats: &TextStats) -> Result<f64, ReadabilityError> {
    let (wps, words) = ratios(stats)?;
    Ok(0.39 * wps + 11.8 * (stats.syllables as f64 / words) - 15.59)
}

/// Gunning Fog Index.
pub fn gfi(stats: &TextStats) -> Result<f64, ReadabilityError> {
    let (wps, words) = ratios(stats)?;
    Ok(0.4 * (wps + 100.0 * (stats.complex_words as f64 / words)))
}

/// Automated Readability Index.
pub fn ari(stats: &TextStats) -> Result<f64, ReadabilityError> {
    let (wps, words) = ratios(stats)?;
    Ok(4.71 * (stats.characters as f64 / words) + 0.5 * wps - 21.43)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub fkgl: f64,
    pub gfi: f64,
    pub ari: f64,
}

pub fn score_text(text: &str) -> Result<Scores, ReadabilityError> {
    let stats = analyze(text);
    Ok(Scores {
        fkgl: fkgl(&stats)?,
        gfi: gfi(&stats)?,
        ari: ari(&stats)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityColumn {
    pub source: String,
    pub texts: usize,
    pub fkgl: f64,
    pub gfi: f64,
    pub ari: f64,
}

/// Mean FKGL/GFI/ARI per source, in [`TextSource::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityTable {
    pub columns: Vec<ReadabilityColumn>,
}

type Getter = fn(&ReadabilityColumn) -> f64;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn score_table(
    corpus: &[RadiologySentence],
    simplifications: &[SimplificationRecord],
) -> Result<ReadabilityTable, ReadabilityError> {
    let mut groups: BTreeMap<TextSource, Vec<&str>> = BTreeMap::new();
    for s in corpus {
        groups.entry(TextSource::Original).or_default().push(&s.text);
    }
    for r in simplifications {
        groups.entry(TextSource::Variant(r.variant)).or_default().push(&r.text);
    }
    let mut columns = Vec::with_capacity(TextSource::ALL.len());
    for source in TextSource::ALL {
        let texts = groups
            .get(&source)
            .filter(|t| !t.is_empty())
            .ok_or_else(|| ReadabilityError::EmptyGroup(source.label().to_string()))?;
        let scores = texts
            .iter()
            .map(|t| score_text(t))
            .collect::<Result<Vec<_>, _>>()?;
        columns.push(ReadabilityColumn {
            source: source.label().to_string(),
            texts: texts.len(),
            fkgl: mean(&scores.iter().map(|s| s.fkgl).collect::<Vec<_>>()),
            gfi: mean(&scores.iter().map(|s| s.gfi).collect::<Vec<_>>()),
            ari: mean(&scores.iter().map(|s| s.ari).collect::<Vec<_>>()),
        });
    }
    Ok(ReadabilityTable { columns })
}

impl ReadabilityTable {
    pub fn column(&self, label: &str) -> Option<&ReadabilityColumn> {
        self.columns.iter().find(|c| c.source == label)
    }

    /// Aligned text rendering: one row per metric, one column per source.
    pub fn render(&self) -> String {
        let mut out = format!("{:<8}", "Metric");
        for c in &self.columns {
            out.push_str(&format!("{:>10}", c.source));
        }
        out.push('\n');
        let rows: [(&str, Getter); 3] = [
            ("FKGL", |c| c.fkgl),
            ("GFI", |c| c.gfi),
            ("ARI", |c| c.ari),
        ];
        for (name, get) in rows {
            out.push_str(&format!("{name:<8}"));
            for c in &self.columns {
                out.push_str(&format!("{:>10.3}", get(c)));
            }
            out.push('\n');
        }
        out
    }
}
