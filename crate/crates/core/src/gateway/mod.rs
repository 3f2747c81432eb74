//! Chat-completion client for external listeners.
//!
//! Requests carry the whole transcript as a `{role, content}` message array.
//! Transient failures are retried with exponential backoff, in-flight
//! requests are bounded, and deterministic (temperature 0) responses are
//! cached on disk keyed by model, temperature and transcript hash.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::prompt::{Transcript, TurnRole};

mod cache;
mod scripted;
mod transport;

pub use cache::{cache_key, ResponseCache};
pub use scripted::{script_from_log, LmListener, Script, ScriptedListener};
pub use transport::{HttpTransport, Transport, TransportError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub base_url: String,
    pub model_id: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_retries: u32,
    pub parallel_episodes: usize,
    pub cache_dir: Option<PathBuf>,
    /// First retry delay; doubles on every further retry.
    pub backoff_ms: u64,
    pub requests_per_minute: Option<u32>,
    pub timeout_secs: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model_id: String::new(),
            api_key_env: "CLBENCH_API_KEY".into(),
            temperature: 0.0,
            max_tokens: 1024,
            max_retries: 3,
            parallel_episodes: 1,
            cache_dir: None,
            backoff_ms: 500,
            requests_per_minute: None,
            timeout_secs: 120,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.parallel_episodes == 0 {
            return Err(GatewayError::InvalidConfig(
                "parallel_episodes must be at least 1".into(),
            ));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidConfig(
                "temperature must be non-negative".into(),
            ));
        }
        if self.model_id.is_empty() {
            return Err(GatewayError::InvalidConfig("model_id is required".into()));
        }
        Ok(())
    }

    /// Identifies the serving setup in run manifests; never includes secrets.
    pub fn fingerprint(&self) -> String {
        format!(
            "{}|{}|t={}|max_tokens={}",
            self.base_url, self.model_id, self.temperature, self.max_tokens
        )
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error("environment variable `{0}` with the API key is not set")]
    MissingCredentials(String),
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("gave up after {attempts} attempts: {last}")]
    ExhaustedRetries { attempts: u32, last: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("request failed: {0}")]
    Request(String),
    #[error("cannot send an empty transcript")]
    EmptyTranscript,
    #[error("response cache: {0}")]
    Cache(#[from] std::io::Error),
}

/// Role/content message array in the usual chat-completion shape.
pub fn chat_messages(transcript: &Transcript) -> Vec<Value> {
    transcript
        .turns
        .iter()
        .map(|t| {
            let role = match t.role {
                TurnRole::System => "system",
                TurnRole::User => "user",
                TurnRole::Listener => "assistant",
            };
            json!({ "role": role, "content": t.content })
        })
        .collect()
}

pub fn request_body(transcript: &Transcript, cfg: &BackendConfig) -> Value {
    json!({
        "model": cfg.model_id,
        "messages": chat_messages(transcript),
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    })
}

/// Text of the first choice's assistant message.
pub fn response_text(body: &Value) -> Result<String, GatewayError> {
    body.get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .and_then(|m| m.get("content"))
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| GatewayError::MalformedResponse(truncate(&body.to_string(), 200)))
}

fn truncate(s: &str, n: usize) -> String {
    if s.len() <= n {
        s.to_owned()
    } else {
        let mut end = n;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}...", &s[..end])
    }
}

// counting semaphore for in-flight requests
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("slot lock");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot lock") += 1;
        self.0.cv.notify_one();
    }
}

pub struct ChatClient {
    cfg: BackendConfig,
    transport: Box<dyn Transport>,
    cache: Option<ResponseCache>,
    slots: Slots,
    last_request: Mutex<Option<Instant>>,
    requests: AtomicU64,
    cache_hits: AtomicU64,
}

impl ChatClient {
    pub fn new(cfg: BackendConfig, transport: Box<dyn Transport>) -> Result<Self, GatewayError> {
        cfg.validate()?;
        let cache = cfg.cache_dir.as_deref().map(ResponseCache::open).transpose()?;
        Ok(Self {
            slots: Slots::new(cfg.parallel_episodes),
            cfg,
            transport,
            cache,
            last_request: Mutex::new(None),
            requests: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        })
    }

    /// Client over HTTP.
    pub fn http(cfg: BackendConfig) -> Result<Self, GatewayError> {
        let transport = HttpTransport::new(Duration::from_secs(cfg.timeout_secs))?;
        Self::new(cfg, Box::new(transport))
    }

    pub fn config(&self) -> &BackendConfig {
        &self.cfg
    }

    /// Requests that reached the transport (retries included).
    pub fn requests_sent(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    pub fn cache_hits(&self) -> u64 {
        self.cache_hits.load(Ordering::Relaxed)
    }

    fn cacheable(&self) -> bool {
        self.cfg.temperature == 0.0
    }

    fn pace(&self) {
        let Some(rpm) = self.cfg.requests_per_minute.filter(|&r| r > 0) else {
            return;
        };
        let gap = Duration::from_secs_f64(60.0 / rpm as f64);
        let mut last = self.last_request.lock().expect("pace lock");
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < gap {
                std::thread::sleep(gap - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    pub fn complete_chat(&self, transcript: &Transcript) -> Result<String, GatewayError> {
        if transcript.is_empty() {
            return Err(GatewayError::EmptyTranscript);
        }
        let body = request_body(transcript, &self.cfg);
        let key = cache_key(&self.cfg.model_id, self.cfg.temperature, &body["messages"]);
        if self.cacheable() {
            if let Some(cache) = &self.cache {
                if let Some(hit) = cache.get(&key)? {
                    self.cache_hits.fetch_add(1, Ordering::Relaxed);
                    return Ok(hit);
                }
            }
        }

        let api_key = std::env::var(&self.cfg.api_key_env)
            .map_err(|_| GatewayError::MissingCredentials(self.cfg.api_key_env.clone()))?;
        let url = self.cfg.endpoint();
        let _slot = self.slots.acquire();

        let attempts = self.cfg.max_retries + 1;
        let mut delay = Duration::from_millis(self.cfg.backoff_ms);
        let mut last = String::new();
        for attempt in 1..=attempts {
            self.pace();
            self.requests.fetch_add(1, Ordering::Relaxed);
            match self.transport.post(&url, &api_key, &body) {
                Ok(response) => {
                    let text = response_text(&response)?;
                    if self.cacheable() {
                        if let Some(cache) = &self.cache {
                            cache.put(&key, &self.cfg.model_id, &text)?;
                        }
                    }
                    return Ok(text);
                }
                Err(TransportError::Transient(msg)) => {
                    log::warn!("attempt {attempt}/{attempts} failed: {msg}");
                    last = msg;
                    if attempt < attempts {
                        std::thread::sleep(delay);
                        delay = delay.saturating_mul(2);
                    }
                }
                Err(TransportError::Auth(msg)) => return Err(GatewayError::Auth(msg)),
                Err(TransportError::Fatal(msg)) => return Err(GatewayError::Request(msg)),
            }
        }
        Err(GatewayError::ExhaustedRetries { attempts, last })
    }
}
