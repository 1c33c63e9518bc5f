//! The run configuration file (TOML). Every key is optional.
//!
//! ```toml
//! seed = 7
//! workers = 4
//! backend = "scripted"            # live | scripted | cached
//! script = "my_script.json"       # scripted backend; bundled demo script if absent
//! templates = "prompts.toml"
//! cache_dir = ".radsimp-cache"
//! rate_limit_per_minute = 60      # 0 disables throttling
//!
//! [model]
//! model_name = "gpt-3.5-turbo"
//! temperature = 0.8
//! max_output_tokens = 1024
//! request_timeout = 60
//!
//! [loop]
//! max_refine_rounds = 5
//! stop_prefix = "No"
//!
//! [http]
//! base_url = "https://api.openai.com/v1"
//! response_path = "choices.0.message.content"
//! retry = { max_retries = 3, initial_backoff = 1.0 }
//!
//! [serve]
//! bind = "127.0.0.1:8080"
//! state_dir = "survey-state"
//! ```

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use radsimp_core::chat::ModelParams;
use radsimp_core::simplifier::LoopConfig;
use radsimp_llm::HttpConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    #[default]
    Scripted,
    /// Live backend behind the on-disk response cache.
    Cached,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Live => "live",
            BackendKind::Scripted => "scripted",
            BackendKind::Cached => "cached",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopSection {
    pub max_refine_rounds: u32,
    pub stop_prefix: String,
    pub cot_extract_final_paragraph: bool,
}

impl Default for LoopSection {
    fn default() -> Self {
        let d = LoopConfig::default();
        Self {
            max_refine_rounds: d.max_refine_rounds,
            stop_prefix: d.stop_prefix,
            cot_extract_final_paragraph: d.cot_extract_final_paragraph,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSection {
    pub bind: String,
    pub state_dir: PathBuf,
}

impl Default for ServeSection {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            state_dir: "survey-state".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
    pub backend: BackendKind,
    pub script: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub rate_limit_per_minute: u32,
    pub model: ModelParams,
    #[serde(rename = "loop")]
    pub loop_: LoopSection,
    pub http: HttpConfig,
    pub serve: ServeSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 4,
            backend: BackendKind::default(),
            script: None,
            templates: None,
            cache_dir: ".radsimp-cache".into(),
            rate_limit_per_minute: 60,
            model: ModelParams::default(),
            loop_: LoopSection::default(),
            http: HttpConfig::default(),
            serve: ServeSection::default(),
        }
    }
}

/// Resolves `p` against the directory of the config file.
fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config: Self = toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.script, &mut config.templates].into_iter().flatten() {
            rebase(base, p);
        }
        rebase(base, &mut config.cache_dir);
        rebase(base, &mut config.serve.state_dir);
        Ok(config)
    }

    pub fn loop_config(&self) -> LoopConfig {
        LoopConfig {
            max_refine_rounds: self.loop_.max_refine_rounds,
            params: self.model.clone(),
            stop_prefix: self.loop_.stop_prefix.clone(),
            worker_count: self.workers,
            cot_extract_final_paragraph: self.loop_.cot_extract_final_paragraph,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.loop_config().validate().map_err(CliError::config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_in_docs_parses() {
        let doc: String = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        let c: RunConfig = toml::from_str(&doc).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.workers, 4);
        assert_eq!(c.model.temperature, 0.8);
        assert_eq!(c.http.retry.max_retries, 3);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sed = 1").is_err());
        assert!(toml::from_str::<RunConfig>("[model]\ntemprature = 1.0").is_err());
    }

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(toml::from_str::<RunConfig>("").unwrap(), RunConfig::default());
    }
}
