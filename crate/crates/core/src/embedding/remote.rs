//! Remote HTTP embedder: posts `{"input": [texts], "model": <id>}` and
//! expects a bare JSON array of float arrays back.

use std::sync::Arc;
use std::time::Duration;

use super::{EmbedError, Embedder, EmbedderConfig, EmbeddingVector};
use crate::transport::Transport;

pub struct RemoteEmbedder {
    endpoint_url: String,
    model_id: String,
    dimension: usize,
    timeout: Duration,
    transport: Arc<dyn Transport>,
}

impl RemoteEmbedder {
    pub fn new(config: &EmbedderConfig, transport: Arc<dyn Transport>) -> Result<Self, EmbedError> {
        config.validate()?;
        let endpoint_url = config
            .endpoint_url
            .clone()
            .ok_or_else(|| EmbedError::InvalidConfig("remote embedder requires endpoint_url".into()))?;
        Ok(Self {
            endpoint_url,
            model_id: config.model_id.clone().unwrap_or_else(|| "default".into()),
            dimension: config.dimension,
            timeout: Duration::from_millis(config.timeout_ms),
            transport,
        })
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let body = serde_json::json!({ "input": texts, "model": self.model_id });
        let reply = self
            .transport
            .post_json(&self.endpoint_url, &body, None, self.timeout)
            .map_err(|e| EmbedError::Remote(e.to_string()))?;
        if reply.status != 200 {
            return Err(EmbedError::Remote(format!(
                "endpoint returned HTTP {}",
                reply.status
            )));
        }
        let rows: Vec<Vec<f64>> = serde_json::from_str(&reply.body)
            .map_err(|e| EmbedError::Remote(format!("malformed embedding response: {e}")))?;
        if rows.len() != texts.len() {
            return Err(EmbedError::Remote(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                rows.len()
            )));
        }
        rows.into_iter()
            .map(|mut values| {
                if values.len() != self.dimension {
                    return Err(EmbedError::Remote(format!(
                        "embedding dimension {} does not match configured {}",
                        values.len(),
                        self.dimension
                    )));
                }
                let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    return Err(EmbedError::Remote(
                        "endpoint returned a zero or non-finite vector".into(),
                    ));
                }
                for v in &mut values {
                    *v /= norm;
                }
                Ok(EmbeddingVector::new(values))
            })
            .collect()
    }
}

impl Embedder for RemoteEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText { index: None });
        }
        Ok(self.request(&[text])?.pop().expect("one row checked"))
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        for (i, text) in texts.iter().enumerate() {
            if text.trim().is_empty() {
                return Err(EmbedError::EmptyText { index: Some(i) });
            }
        }
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        self.request(texts)
    }
}
