//! Chat-completion backends. The classifier talks to a `ChatBackend`
//! trait object, so the same prompt chain runs against a local
//! OpenAI-compatible server ([`http::HttpChatBackend`]) or the offline
//! mocks in [`mock`].

pub mod http;
pub mod mock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TIMEOUT_MS: u64 = 120_000;
pub const DEFAULT_MAX_RETRIES: u32 = 2;
pub const DEFAULT_RETRY_BACKOFF_MS: u64 = 500;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 1;
pub const DEFAULT_COMPLETIONS_PATH: &str = "/v1/chat/completions";
pub const DEFAULT_TEMPERATURE: f64 = 0.0;
pub const DEFAULT_MAX_TOKENS: u32 = 512;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend rejected the request with HTTP {status}: {message}")]
    ClientError { status: u16, message: String },
    #[error("backend unavailable after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("malformed backend response: {0}")]
    Protocol(String),
    #[error("scripted backend ran out of replies after {0}")]
    ScriptExhausted(usize),
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn new(messages: Vec<ChatMessage>) -> Self {
        Self {
            messages,
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
}

/// One request/response pair captured when transcript recording is on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptExchange {
    pub request: ChatRequest,
    pub response: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// OpenAI-compatible chat-completions endpoint.
    Http,
    /// Offline stand-in that decides from the retrieval score alone.
    Oracle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Base URL, e.g. `http://127.0.0.1:8080`; required for `kind = http`.
    #[serde(default)]
    pub endpoint_url: Option<String>,
    /// Path joined onto `endpoint_url`.
    #[serde(default = "default_path")]
    pub path: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Retries after the first attempt, so at most `max_retries + 1` calls.
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// First retry delay; doubles on each further retry.
    #[serde(default = "default_backoff_ms")]
    pub retry_backoff_ms: u64,
    /// Upper bound on concurrent in-flight requests.
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    /// Name of the environment variable holding the bearer token, if the
    /// endpoint needs one. The token itself never appears in config files.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Record every exchange for audit output.
    #[serde(default)]
    pub record_transcript: bool,
    /// Oracle decision threshold on the retrieval score.
    #[serde(default = "default_oracle_threshold")]
    pub oracle_threshold: f64,
}

fn default_path() -> String {
    DEFAULT_COMPLETIONS_PATH.to_string()
}
fn default_timeout_ms() -> u64 {
    DEFAULT_TIMEOUT_MS
}
fn default_max_retries() -> u32 {
    DEFAULT_MAX_RETRIES
}
fn default_backoff_ms() -> u64 {
    DEFAULT_RETRY_BACKOFF_MS
}
fn default_max_in_flight() -> usize {
    DEFAULT_MAX_IN_FLIGHT
}
fn default_oracle_threshold() -> f64 {
    mock::DEFAULT_ORACLE_THRESHOLD
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Oracle,
            endpoint_url: None,
            path: default_path(),
            timeout_ms: DEFAULT_TIMEOUT_MS,
            max_retries: DEFAULT_MAX_RETRIES,
            retry_backoff_ms: DEFAULT_RETRY_BACKOFF_MS,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            api_key_env: None,
            record_transcript: false,
            oracle_threshold: mock::DEFAULT_ORACLE_THRESHOLD,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.kind == BackendKind::Http {
            match &self.endpoint_url {
                None => {
                    return Err(BackendError::InvalidConfig(
                        "http backend needs endpoint_url".into(),
                    ))
                }
                Some(url) if !url.starts_with("http://") && !url.starts_with("https://") => {
                    return Err(BackendError::InvalidConfig(format!(
                        "endpoint_url must be http(s), got {url:?}"
                    )))
                }
                _ => {}
            }
        }
        if self.timeout_ms == 0 {
            return Err(BackendError::InvalidConfig("timeout_ms must be > 0".into()));
        }
        if self.max_in_flight == 0 {
            return Err(BackendError::InvalidConfig(
                "max_in_flight must be >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.oracle_threshold) {
            return Err(BackendError::InvalidConfig(
                "oracle_threshold must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError>;

    /// Model identifier sent with each request and stamped into reports.
    fn model_id(&self) -> &str;

    /// Recorded exchanges; empty unless recording is enabled.
    fn transcript(&self) -> Vec<TranscriptExchange> {
        Vec::new()
    }

    /// How many `complete` calls may usefully run in parallel.
    fn max_in_flight(&self) -> usize {
        1
    }
}

/// Construct a backend for one model from config.
pub fn build_backend(
    config: &BackendConfig,
    model_id: &str,
) -> Result<Box<dyn ChatBackend>, BackendError> {
    config.validate()?;
    match config.kind {
        BackendKind::Http => Ok(Box::new(http::HttpChatBackend::new(
            config,
            model_id,
            std::sync::Arc::new(crate::transport::UreqTransport),
        )?)),
        BackendKind::Oracle => Ok(Box::new(mock::SimilarityOracleBackend::with_threshold(
            model_id,
            config.oracle_threshold,
        ))),
    }
}
