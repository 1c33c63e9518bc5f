use std::sync::atomic::{AtomicUsize, Ordering};

use radsimp_core::chat::{
    demo_script, BackendError, CachedBackend, ChatBackend, ChatMessage, Clock, ModelParams,
    RateLimited, ScriptedBackend,
};
use radsimp_llm::HttpChatBackend;

use crate::config::{BackendKind, RunConfig};
use crate::error::{CliError, Result};

/// Counts calls that reach the wrapped backend.
pub struct Counting<B> {
    inner: B,
    calls: AtomicUsize,
}

impl<B> Counting<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<B: ChatBackend> ChatBackend for Counting<B> {
    fn complete(&self, history: &[ChatMessage], params: &ModelParams) -> std::result::Result<ChatMessage, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(history, params)
    }
}

fn live(config: &RunConfig) -> Result<Box<dyn ChatBackend>> {
    let http = config.http.clone().with_env();
    if http.api_key.is_none() {
        log::warn!("{} is not set; requests are sent without credentials", radsimp_llm::API_KEY_ENV);
    }
    let client = HttpChatBackend::new(http).map_err(CliError::config)?;
    Ok(if config.rate_limit_per_minute > 0 {
        Box::new(RateLimited::new(client, config.rate_limit_per_minute))
    } else {
        Box::new(client)
    })
}

/// The backend plus the clock its transcripts should use: scripted runs get
/// logical timestamps so their output is byte-stable.
pub fn build(config: &RunConfig) -> Result<(Box<dyn ChatBackend>, Clock)> {
    match config.backend {
        BackendKind::Scripted => {
            let backend = match &config.script {
                Some(path) => ScriptedBackend::load(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?,
                None => ScriptedBackend::from_script(demo_script()),
            };
            Ok((Box::new(backend), Clock::Logical))
        }
        BackendKind::Live => Ok((live(config)?, Clock::System)),
        BackendKind::Cached => {
            let cached = CachedBackend::new(live(config)?, &config.cache_dir)
                .map_err(|e| CliError::io(&config.cache_dir, e))?;
            Ok((Box::new(cached), Clock::System))
        }
    }
}
