//! Minimal HTTP POST transport behind a trait so tests can inject
//! failures, capture request bodies, and count in-flight calls.

use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("transport failure: {0}")]
    Other(String),
}

/// Raw reply from one POST, with non-2xx statuses returned (not errored)
/// so retry policy stays with the caller.
#[derive(Debug, Clone)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        body: &serde_json::Value,
        bearer_token: Option<&str>,
        timeout: Duration,
    ) -> Result<HttpReply, TransportError>;
}

/// Production transport backed by `ureq`.
pub struct UreqTransport;

impl Transport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        body: &serde_json::Value,
        bearer_token: Option<&str>,
        timeout: Duration,
    ) -> Result<HttpReply, TransportError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut request = agent.post(url);
        if let Some(token) = bearer_token {
            request = request.header("authorization", &format!("Bearer {token}"));
        }
        let mut response = request.send_json(body).map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout(timeout),
            ureq::Error::ConnectionFailed => TransportError::Connect(e.to_string()),
            ureq::Error::Io(io) => TransportError::Connect(io.to_string()),
            other => TransportError::Other(other.to_string()),
        })?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::Other(e.to_string()))?;
        Ok(HttpReply { status, body })
    }
}
