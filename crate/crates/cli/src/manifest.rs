//! `manifest.json`: one entry per command run against an output directory.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_path: Option<PathBuf>,
    /// `None` means the bundled demo corpus.
    pub corpus_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub backend: Option<String>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub started_at_ms: u64,
    pub finished_at_ms: u64,
    /// Every file written by this run, relative to `output_dir`.
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub details: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct ManifestFile {
    pub runs: Vec<RunManifest>,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl RunManifest {
    pub fn start(command: &str, output_dir: &Path, config_path: Option<&Path>, seed: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_path: config_path.map(Path::to_path_buf),
            corpus_path: None,
            output_dir: output_dir.to_path_buf(),
            backend: None,
            seed,
            workers: None,
            started_at_ms: now_ms(),
            finished_at_ms: 0,
            outputs: Vec::new(),
            details: serde_json::Map::new(),
        }
    }

    pub fn output(&mut self, path: &Path) {
        let rel = path.strip_prefix(&self.output_dir).unwrap_or(path);
        self.outputs.push(rel.to_string_lossy().into_owned());
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details
            .insert(key.into(), serde_json::to_value(value).expect("detail serializes"));
    }

    /// Appends this run to the directory's manifest file.
    pub fn finish(mut self) -> Result<()> {
        self.finished_at_ms = now_ms();
        let path = self.output_dir.join(MANIFEST_FILE);
        let mut file: ManifestFile = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => ManifestFile::default(),
            Err(e) => return Err(CliError::io(&path, e)),
        };
        self.outputs.sort();
        self.outputs.dedup();
        file.runs.push(self);
        let text = serde_json::to_string_pretty(&file).expect("manifest serializes");
        crate::write_atomic(&path, text.as_bytes())
    }
}
