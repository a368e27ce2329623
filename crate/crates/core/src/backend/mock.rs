//! Offline backends: a scripted backend for tests and a similarity
//! oracle that stands in for a language model when none is running.

use std::collections::VecDeque;
use std::sync::Mutex;

use super::{BackendError, ChatBackend, ChatRequest, ChatResponse, TranscriptExchange};

pub const DEFAULT_ORACLE_THRESHOLD: f64 = 0.85;

/// Marker prefixing the retrieval-score line appended to each prompt.
pub const SCORE_ENVELOPE_PREFIX: &str = "CTX score=";

/// Replays a fixed list of replies in order; errors when the script runs
/// out. Always records its transcript.
pub struct ScriptedBackend {
    model_id: String,
    replies: Mutex<VecDeque<String>>,
    total: usize,
    transcript: Mutex<Vec<TranscriptExchange>>,
}

impl ScriptedBackend {
    pub fn new(model_id: &str, replies: Vec<String>) -> Self {
        Self {
            model_id: model_id.to_string(),
            total: replies.len(),
            replies: Mutex::new(replies.into()),
            transcript: Mutex::new(Vec::new()),
        }
    }

    pub fn from_strs(model_id: &str, replies: &[&str]) -> Self {
        Self::new(model_id, replies.iter().map(|s| s.to_string()).collect())
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().unwrap().len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let reply = self
            .replies
            .lock()
            .unwrap()
            .pop_front()
            .ok_or(BackendError::ScriptExhausted(self.total))?;
        self.transcript.lock().unwrap().push(TranscriptExchange {
            request: request.clone(),
            response: reply.clone(),
        });
        Ok(ChatResponse { content: reply })
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn transcript(&self) -> Vec<TranscriptExchange> {
        self.transcript.lock().unwrap().clone()
    }
}

/// Decides purely from the retrieval score carried in the prompt
/// envelope: similarity below the threshold means the entry looks unlike
/// every stored normal entry, so it is called anomalous.
///
/// This gives the whole pipeline a deterministic end-to-end oracle — the
/// expected verdict for any input is a one-line rule.
pub struct SimilarityOracleBackend {
    model_id: String,
    threshold: f64,
    max_in_flight: usize,
    transcript: Mutex<Vec<TranscriptExchange>>,
}

impl SimilarityOracleBackend {
    pub fn new(model_id: &str) -> Self {
        Self::with_threshold(model_id, DEFAULT_ORACLE_THRESHOLD)
    }

    pub fn with_threshold(model_id: &str, threshold: f64) -> Self {
        Self {
            model_id: model_id.to_string(),
            threshold,
            max_in_flight: 1,
            transcript: Mutex::new(Vec::new()),
        }
    }

    /// Advertise a parallelism budget; the oracle itself is stateless.
    pub fn with_concurrency(mut self, max_in_flight: usize) -> Self {
        self.max_in_flight = max_in_flight.max(1);
        self
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Find the score envelope in the latest user message.
fn extract_score(request: &ChatRequest) -> Option<f64> {
    let last_user = request
        .messages
        .iter()
        .rev()
        .find(|m| m.role == super::Role::User)?;
    last_user
        .content
        .lines()
        .rev()
        .find_map(|line| line.trim().strip_prefix(SCORE_ENVELOPE_PREFIX))
        .and_then(|raw| raw.trim().parse::<f64>().ok())
}

impl ChatBackend for SimilarityOracleBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let score = extract_score(request).ok_or_else(|| {
            BackendError::Protocol(format!(
                "similarity oracle needs a \"{SCORE_ENVELOPE_PREFIX}<value>\" line in the latest user message"
            ))
        })?;
        let (comparison, verdict) = if score < self.threshold {
            ("below", "ANOMALY")
        } else {
            ("at or above", "NORMAL")
        };
        let content = format!(
            "The entry's best match among stored normal entries scores {score} in cosine \
             similarity, {comparison} the {} decision threshold.\nVERDICT: {verdict}",
            self.threshold
        );
        self.transcript.lock().unwrap().push(TranscriptExchange {
            request: request.clone(),
            response: content.clone(),
        });
        Ok(ChatResponse { content })
    }

    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn transcript(&self) -> Vec<TranscriptExchange> {
        self.transcript.lock().unwrap().clone()
    }

    fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }
}
