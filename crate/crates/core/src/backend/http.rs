//! OpenAI-compatible chat-completions client: bounded concurrency,
//! bounded retries with doubling backoff, and strict request shape.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use super::{
    BackendConfig, BackendError, ChatBackend, ChatRequest, ChatResponse, TranscriptExchange,
};
use crate::transport::{Transport, TransportError};

/// Counting semaphore; `std::sync` has no native one.
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.semaphore.permits.lock().unwrap() += 1;
        self.semaphore.available.notify_one();
    }
}

pub struct HttpChatBackend {
    url: String,
    model_id: String,
    bearer_token: Option<String>,
    timeout: Duration,
    max_retries: u32,
    retry_backoff: Duration,
    max_in_flight: usize,
    semaphore: Semaphore,
    transport: Arc<dyn Transport>,
    transcript: Option<Mutex<Vec<TranscriptExchange>>>,
}

impl HttpChatBackend {
    pub fn new(
        config: &BackendConfig,
        model_id: &str,
        transport: Arc<dyn Transport>,
    ) -> Result<Self, BackendError> {
        config.validate()?;
        let base = config
            .endpoint_url
            .as_deref()
            .ok_or_else(|| BackendError::InvalidConfig("http backend needs endpoint_url".into()))?;
        let url = format!("{}{}", base.trim_end_matches('/'), config.path);
        let bearer_token = match &config.api_key_env {
            None => None,
            Some(var) => Some(std::env::var(var).map_err(|_| {
                BackendError::InvalidConfig(format!(
                    "api_key_env names {var:?} but that variable is not set"
                ))
            })?),
        };
        Ok(Self {
            url,
            model_id: model_id.to_string(),
            bearer_token,
            timeout: Duration::from_millis(config.timeout_ms),
            max_retries: config.max_retries,
            retry_backoff: Duration::from_millis(config.retry_backoff_ms),
            max_in_flight: config.max_in_flight,
            semaphore: Semaphore::new(config.max_in_flight),
            transport,
            transcript: config.record_transcript.then(|| Mutex::new(Vec::new())),
        })
    }

    fn request_body(&self, request: &ChatRequest) -> Value {
        // Exactly these four fields; strict servers reject extras.
        json!({
            "model": self.model_id,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }
}

/// Delay before each retry: `base`, then doubling.
pub fn backoff_delays(max_retries: u32, base: Duration) -> Vec<Duration> {
    (0..max_retries).map(|i| base * 2u32.pow(i)).collect()
}

/// Extract `choices[0].message.content`.
fn parse_completion(body: &str) -> Result<String, BackendError> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| BackendError::Protocol(format!("response is not JSON: {e}")))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| {
            BackendError::Protocol("response lacks choices[0].message.content".into())
        })
}

fn snippet(text: &str) -> String {
    const LIMIT: usize = 200;
    if text.len() <= LIMIT {
        text.to_string()
    } else {
        let mut end = LIMIT;
        while !text.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &text[..end])
    }
}

impl ChatBackend for HttpChatBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let _permit = self.semaphore.acquire();
        let body = self.request_body(request);
        let delays = backoff_delays(self.max_retries, self.retry_backoff);

        let mut attempts = 0;
        let mut last_failure = String::new();
        for attempt in 0..=self.max_retries {
            attempts += 1;
            let outcome = self.transport.post_json(
                &self.url,
                &body,
                self.bearer_token.as_deref(),
                self.timeout,
            );
            match outcome {
                Ok(reply) if (200..300).contains(&reply.status) => {
                    let content = parse_completion(&reply.body)?;
                    if let Some(transcript) = &self.transcript {
                        transcript.lock().unwrap().push(TranscriptExchange {
                            request: request.clone(),
                            response: content.clone(),
                        });
                    }
                    return Ok(ChatResponse { content });
                }
                Ok(reply) if (400..500).contains(&reply.status) => {
                    // Client errors are deterministic; retrying cannot help.
                    return Err(BackendError::ClientError {
                        status: reply.status,
                        message: snippet(&reply.body),
                    });
                }
                Ok(reply) => {
                    last_failure = format!("HTTP {}: {}", reply.status, snippet(&reply.body));
                }
                Err(TransportError::Timeout(t)) => {
                    last_failure = format!("timeout after {t:?}");
                }
                Err(TransportError::Connect(msg)) => {
                    last_failure = format!("connect: {msg}");
                }
                Err(TransportError::Other(msg)) => {
                    return Err(BackendError::Protocol(format!("transport: {msg}")));
                }
            }
            if (attempt as usize) < delays.len() {
                std::thread::sleep(delays[attempt as usize]);
            }
        }
        Err(BackendError::RetriesExhausted {
            attempts,
            last: last_failure,
        })
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn transcript(&self) -> Vec<TranscriptExchange> {
        match &self.transcript {
            Some(t) => t.lock().unwrap().clone(),
            None => Vec::new(),
        }
    }

    fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }
}
