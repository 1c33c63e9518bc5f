use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::{BackendError, ChatBackend, ChatMessage, ModelParams};

/// Blocking token bucket refilled at `per_minute / 60` tokens per second.
#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    refill_per_sec: f64,
    state: Mutex<BucketState>,
}

#[derive(Debug)]
struct BucketState {
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    /// `per_minute` must be positive. Burst capacity equals one second's worth,
    /// but never less than one token.
    pub fn per_minute(per_minute: u32) -> Self {
        assert!(per_minute > 0, "rate limit must be positive");
        let refill_per_sec = f64::from(per_minute) / 60.0;
        let capacity = refill_per_sec.max(1.0);
        Self {
            capacity,
            refill_per_sec,
            state: Mutex::new(BucketState {
                tokens: capacity,
                last: Instant::now(),
            }),
        }
    }

    /// Takes one token, sleeping until one is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut st = self.state.lock().expect("token bucket poisoned");
                let now = Instant::now();
                let elapsed = now.duration_since(st.last).as_secs_f64();
                st.tokens = (st.tokens + elapsed * self.refill_per_sec).min(self.capacity);
                st.last = now;
                if st.tokens >= 1.0 {
                    st.tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - st.tokens) / self.refill_per_sec)
            };
            std::thread::sleep(wait);
        }
    }
}

/// Wraps a backend so every call first takes a token from a shared bucket.
pub struct RateLimited<B> {
    inner: B,
    bucket: TokenBucket,
}

impl<B> RateLimited<B> {
    pub fn new(inner: B, per_minute: u32) -> Self {
        Self {
            inner,
            bucket: TokenBucket::per_minute(per_minute),
        }
    }
}

impl<B: ChatBackend> ChatBackend for RateLimited<B> {
    fn complete(
        &self,
        history: &[ChatMessage],
        params: &ModelParams,
    ) -> Result<ChatMessage, BackendError> {
        self.bucket.acquire();
        self.inner.complete(history, params)
    }
}
