//! Study definition file for `serve`, `plan` and `validate`.
//!
//! ```toml
//! corpus = "corpus.jsonl"                  # omit for the bundled demo corpus
//! simplifications = "out/simplifications.jsonl"
//!
//! [study]
//! id = "pilot"
//! seed = 7
//! token_salt = "change-me"
//!
//! [[study.raters]]
//! id = "lay1"
//! role = "layperson"
//!
//! [[study.raters]]
//! id = "rad1"
//! role = "expert"
//! ```
//!
//! Relative paths are resolved against the file's directory.

use std::path::{Path, PathBuf};

use radsimp_core::corpus::load_simplifications;
use radsimp_core::survey::{Study, StudyConfig};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub corpus: Option<PathBuf>,
    pub simplifications: PathBuf,
    pub study: StudyConfig,
}

impl StudyFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut file: Self = toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(c) = &mut file.corpus {
            if c.is_relative() {
                *c = base.join(&*c);
            }
        }
        if file.simplifications.is_relative() {
            file.simplifications = base.join(&file.simplifications);
        }
        Ok(file)
    }

    /// Loads the referenced files and builds the study. `seed` overrides the
    /// file's seed when given.
    pub fn build(mut self, seed: Option<u64>) -> Result<Study> {
        if let Some(s) = seed {
            self.study.seed = s;
        }
        let corpus = crate::load_corpus(self.corpus.as_deref())?;
        let records = load_simplifications(&self.simplifications)
            .map_err(|e| CliError::from((self.simplifications.as_path(), e)))?;
        Study::new(self.study, corpus, records).map_err(CliError::validation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_in_docs_parses() {
        let doc: String = include_str!("study_file.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        let f: StudyFile = toml::from_str(&doc).unwrap();
        assert_eq!(f.study.id, "pilot");
        assert_eq!(f.study.raters.len(), 2);
        assert!(f.study.blind_experts);
    }
}
