use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{validate_history, BackendError, ChatBackend, ChatMessage, ModelParams};

#[derive(Serialize)]
struct KeyMaterial<'a> {
    model_name: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    seed: Option<u64>,
}

/// SHA-256 over exactly (model name, full history, temperature, seed).
/// Timeout and token limit are deliberately not part of the key.
pub fn cache_key(history: &[ChatMessage], params: &ModelParams) -> String {
    let material = KeyMaterial {
        model_name: &params.model_name,
        messages: history,
        temperature: params.temperature,
        seed: params.seed,
    };
    let bytes = serde_json::to_vec(&material).expect("key material serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    response: ChatMessage,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

/// Content-addressed on-disk response cache in front of another backend.
///
/// Entries live at `<dir>/<first two hex chars>/<key>.json`. Writers go through
/// a unique temp file and a rename, so concurrent sessions can share a cache.
pub struct CachedBackend<B> {
    inner: B,
    dir: PathBuf,
    hits: AtomicU64,
    misses: AtomicU64,
    tmp_counter: AtomicU64,
}

impl<B: ChatBackend> CachedBackend<B> {
    pub fn new(inner: B, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            inner,
            dir,
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            tmp_counter: AtomicU64::new(0),
        })
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    fn read_entry(path: &Path, key: &str) -> Option<ChatMessage> {
        let text = fs::read_to_string(path).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        (entry.key == key).then_some(entry.response)
    }

    fn write_entry(&self, path: &Path, key: &str, response: &ChatMessage) -> std::io::Result<()> {
        let parent = path.parent().expect("entry path has a parent");
        fs::create_dir_all(parent)?;
        let n = self.tmp_counter.fetch_add(1, Ordering::Relaxed);
        let tmp = parent.join(format!(".{key}.{}.{n}.tmp", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            let entry = CacheEntry {
                key: key.to_string(),
                response: response.clone(),
            };
            serde_json::to_writer(&mut f, &entry).map_err(std::io::Error::other)?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)
    }
}

impl<B: ChatBackend> ChatBackend for CachedBackend<B> {
    fn complete(
        &self,
        history: &[ChatMessage],
        params: &ModelParams,
    ) -> Result<ChatMessage, BackendError> {
        validate_history(history)?;
        let key = cache_key(history, params);
        let path = self.entry_path(&key);
        if let Some(hit) = Self::read_entry(&path, &key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(hit);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let response = self.inner.complete(history, params)?;
        self.write_entry(&path, &key, &response)?;
        Ok(response)
    }
}
