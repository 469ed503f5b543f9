//! Blocking client for OpenAI-compatible chat-completion endpoints.
//!
//! Field mapping of a [`CompletionRequest`] onto the wire:
//!
//! | request field       | JSON body     |
//! |---------------------|---------------|
//! | endpoint model name | `model`       |
//! | prompt              | `messages[0]` with role `user` |
//! | temperature         | `temperature` |
//! | top_p               | `top_p`       |
//! | max_output_tokens   | `max_tokens`  |
//! | seed                | `seed` (omitted when absent) |
//!
//! Greedy decoding is sent as `temperature = 0, top_p = 1`. The bearer token
//! is read from the environment variable named by the endpoint at call time
//! and is never part of any config file.

mod limits;

use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::DecodingConfig;

pub use limits::{Clock, FakeClock, Permit, Semaphore, SystemClock, TokenBucket};

pub const DEFAULT_TOKEN_VAR: &str = "CHAINLAB_API_TOKEN";
const EXCERPT_LEN: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport error after {attempts} attempts (last status {last_status:?}): {message}")]
    Transport {
        attempts: u32,
        last_status: Option<u16>,
        message: String,
    },
    #[error("endpoint returned HTTP {status}: {excerpt}")]
    Http { status: u16, excerpt: String },
    #[error("protocol error: {message}; payload starts with: {excerpt}")]
    Protocol { message: String, excerpt: String },
}

fn default_token_var() -> String {
    DEFAULT_TOKEN_VAR.into()
}
fn default_timeout() -> f64 {
    60.0
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> f64 {
    1.0
}
fn default_jitter() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub id: String,
    pub base_url: String,
    pub model_name: String,
    #[serde(default = "default_token_var")]
    pub auth_env_var: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub backoff_base_secs: f64,
    /// Fraction of each backoff delay that is randomized; 1.0 is full jitter.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
}

impl EndpointConfig {
    pub fn new(id: impl Into<String>, base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            base_url: base_url.into(),
            model_name: model_name.into(),
            auth_env_var: default_token_var(),
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            backoff_base_secs: default_backoff(),
            jitter: default_jitter(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(LlmError::Config(format!("endpoint `{}`: timeout must be positive", self.id)));
        }
        if !(self.backoff_base_secs >= 0.0 && self.backoff_base_secs.is_finite()) {
            return Err(LlmError::Config(format!("endpoint `{}`: backoff base must be non-negative", self.id)));
        }
        if !(0.0..=1.0).contains(&self.jitter) {
            return Err(LlmError::Config(format!("endpoint `{}`: jitter must be in [0, 1]", self.id)));
        }
        Ok(())
    }

    pub fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }

    /// Upper bound of the delay before retry number `retry` (1-based).
    pub fn backoff_ceiling(&self, retry: u32) -> Duration {
        Duration::from_secs_f64(self.backoff_base_secs * 2f64.powi(retry.saturating_sub(1) as i32))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub top_p: f64,
    pub seed: Option<u64>,
    pub max_output_tokens: u32,
}

impl CompletionRequest {
    pub fn from_decoding(prompt: impl Into<String>, decoding: &DecodingConfig, seed: Option<u64>, max_output_tokens: u32) -> Self {
        let (temperature, top_p) = if decoding.is_greedy() {
            (0.0, 1.0)
        } else {
            (decoding.temperature, decoding.top_p)
        };
        Self {
            prompt: prompt.into(),
            temperature,
            top_p,
            seed,
            max_output_tokens,
        }
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: [WireMessage<'a>; 1],
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

/// The exact request body sent for `req`.
pub fn request_body(cfg: &EndpointConfig, req: &CompletionRequest) -> Vec<u8> {
    let wire = WireRequest {
        model: &cfg.model_name,
        messages: [WireMessage {
            role: "user",
            content: &req.prompt,
        }],
        temperature: req.temperature,
        top_p: req.top_p,
        max_tokens: req.max_output_tokens,
        seed: req.seed,
    };
    serde_json::to_vec(&wire).expect("request serialization cannot fail")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
    #[serde(default)]
    pub total_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub usage: Option<Usage>,
    pub latency: Duration,
    pub attempts: u32,
    pub system_fingerprint: Option<String>,
}

/// Per-call metadata kept on kernel steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub model: String,
    pub latency_ms: u64,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_sent: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_fingerprint: Option<String>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<Usage>,
    #[serde(default)]
    system_fingerprint: Option<String>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireReply,
}

#[derive(Deserialize)]
struct WireReply {
    content: Option<String>,
}

fn excerpt(body: &[u8]) -> String {
    let s = String::from_utf8_lossy(body);
    s.chars().take(EXCERPT_LEN).collect()
}

fn parse_response(body: &[u8]) -> Result<(String, Option<Usage>, Option<String>), LlmError> {
    let wire: WireResponse = serde_json::from_slice(body).map_err(|e| LlmError::Protocol {
        message: e.to_string(),
        excerpt: excerpt(body),
    })?;
    let text = wire
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| LlmError::Protocol {
            message: "response has no message content".into(),
            excerpt: excerpt(body),
        })?;
    Ok((text, wire.usage, wire.system_fingerprint))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// A failure below HTTP: connection refused, timeout, reset.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct TransportError(pub String);

pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: &str, body: &[u8], timeout: Duration) -> Result<HttpResponse, TransportError>;
}

/// HTTP(S) transport backed by `ureq`.
#[derive(Debug)]
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new() -> Self {
        Self {
            agent: ureq::AgentBuilder::new().build(),
        }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, bearer: &str, body: &[u8], timeout: Duration) -> Result<HttpResponse, TransportError> {
        let result = self
            .agent
            .post(url)
            .timeout(timeout)
            .set("Authorization", &format!("Bearer {bearer}"))
            .set("Content-Type", "application/json")
            .send_bytes(body);
        let response = match result {
            Ok(r) => r,
            Err(ureq::Error::Status(_, r)) => r,
            Err(ureq::Error::Transport(t)) => return Err(TransportError(t.to_string())),
        };
        let status = response.status();
        let mut buf = Vec::new();
        std::io::Read::read_to_end(&mut response.into_reader(), &mut buf).map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpResponse { status, body: buf })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClientLimits {
    pub max_in_flight: usize,
    pub requests_per_minute: Option<f64>,
}

impl Default for ClientLimits {
    fn default() -> Self {
        Self {
            max_in_flight: 4,
            requests_per_minute: None,
        }
    }
}

fn retryable(status: u16) -> bool {
    status == 429 || status >= 500
}

/// Shared client: one semaphore and one rate limiter for all callers.
pub struct LlmClient {
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    in_flight: Semaphore,
    bucket: Option<TokenBucket>,
    jitter_rng: Mutex<ChaCha8Rng>,
}

impl std::fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmClient").field("bucket", &self.bucket).finish_non_exhaustive()
    }
}

impl LlmClient {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        Self::with_parts(transport, Arc::new(SystemClock::default()), ClientLimits::default())
    }

    pub fn http() -> Self {
        Self::new(Arc::new(UreqTransport::new()))
    }

    pub fn with_parts(transport: Arc<dyn Transport>, clock: Arc<dyn Clock>, limits: ClientLimits) -> Self {
        Self {
            transport,
            clock,
            in_flight: Semaphore::new(limits.max_in_flight),
            bucket: limits.requests_per_minute.map(TokenBucket::per_minute),
            jitter_rng: Mutex::new(ChaCha8Rng::seed_from_u64(0x6a69_7474_6572)),
        }
    }

    fn backoff(&self, cfg: &EndpointConfig, retry: u32) -> Duration {
        let ceiling = cfg.backoff_ceiling(retry).as_secs_f64();
        let u: f64 = self.jitter_rng.lock().unwrap().gen();
        Duration::from_secs_f64(ceiling * (1.0 - cfg.jitter * u))
    }

    /// Send one chat completion, retrying transport failures, 429 and 5xx.
    pub fn complete(&self, cfg: &EndpointConfig, req: &CompletionRequest) -> Result<Completion, LlmError> {
        cfg.validate()?;
        let token = std::env::var(&cfg.auth_env_var)
            .ok()
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| LlmError::Config(format!("environment variable `{}` is not set", cfg.auth_env_var)))?;
        if req.prompt.trim().is_empty() {
            return Err(LlmError::InvalidRequest("prompt is empty".into()));
        }

        let url = cfg.url();
        let body = request_body(cfg, req);
        let timeout = Duration::from_secs_f64(cfg.timeout_secs);
        let _permit = self.in_flight.acquire();
        let started = self.clock.now();
        let mut last_status = None;
        let mut last_message = String::new();

        for attempt in 0..=cfg.max_retries {
            if attempt > 0 {
                self.clock.sleep(self.backoff(cfg, attempt));
            }
            if let Some(bucket) = &self.bucket {
                bucket.acquire(self.clock.as_ref());
            }
            match self.transport.post_json(&url, &token, &body, timeout) {
                Ok(resp) if (200..300).contains(&resp.status) => {
                    let (text, usage, system_fingerprint) = parse_response(&resp.body)?;
                    return Ok(Completion {
                        text,
                        usage,
                        latency: self.clock.now().saturating_sub(started),
                        attempts: attempt + 1,
                        system_fingerprint,
                    });
                }
                Ok(resp) if retryable(resp.status) => {
                    last_status = Some(resp.status);
                    last_message = excerpt(&resp.body);
                }
                Ok(resp) => {
                    return Err(LlmError::Http {
                        status: resp.status,
                        excerpt: excerpt(&resp.body),
                    })
                }
                Err(e) => last_message = e.0,
            }
        }
        Err(LlmError::Transport {
            attempts: cfg.max_retries + 1,
            last_status,
            message: last_message,
        })
    }
}
