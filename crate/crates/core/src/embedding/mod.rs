//! Deterministic text-to-vector embedding.
//!
//! The default embedder hashes character n-grams of the lowercased text
//! into a fixed number of buckets (FNV-1a 64 with a fixed seed) and
//! L2-normalizes the counts. Equal text always yields bitwise-equal
//! vectors, across processes and platforms. A remote HTTP embedder can be
//! configured instead when a served embedding model is available.

mod remote;

pub use remote::RemoteEmbedder;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fixed seed folded into the n-gram hash; all deployments share it so
/// stores built on one machine are queryable on another.
pub const HASH_SEED: u64 = 0x6c6f675f76656373;

pub const DEFAULT_DIMENSION: usize = 256;
pub const DEFAULT_NGRAM_SIZE: usize = 3;
pub const MIN_DIMENSION: usize = 8;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("cannot embed empty text{}", index_suffix(.index))]
    EmptyText { index: Option<usize> },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid embedder config: {0}")]
    InvalidConfig(String),
    #[error("remote embedding backend: {0}")]
    Remote(String),
}

fn index_suffix(index: &Option<usize>) -> String {
    match index {
        Some(i) => format!(" (batch index {i})"),
        None => String::new(),
    }
}

/// Fixed-dimension vector; embedder outputs are L2-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Squared Euclidean distance; errors on dimension mismatch are the
    /// caller's job (used in inner clustering loops).
    pub(crate) fn squared_distance(&self, other: &Self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.values.len() {
            let d = self.values[i] - other.values[i];
            sum += d * d;
        }
        sum
    }

    pub(crate) fn dot(&self, other: &Self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.values.len() {
            sum += self.values[i] * other.values[i];
        }
        sum
    }
}

/// Cosine similarity of two unit-norm vectors (their dot product).
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dimension() != b.dimension() {
        return Err(EmbedError::DimensionMismatch {
            left: a.dimension(),
            right: b.dimension(),
        });
    }
    Ok(a.dot(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    HashedNgram,
    Remote,
}

/// Configuration for constructing an embedder.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub dimension: usize,
    pub ngram_size: usize,
    /// HTTP embeddings endpoint; required for [`EmbedderKind::Remote`].
    #[serde(default)]
    pub endpoint_url: Option<String>,
    /// Model identifier sent to the remote endpoint.
    #[serde(default)]
    pub model_id: Option<String>,
    #[serde(default = "default_remote_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_remote_timeout_ms() -> u64 {
    30_000
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            kind: EmbedderKind::HashedNgram,
            dimension: DEFAULT_DIMENSION,
            ngram_size: DEFAULT_NGRAM_SIZE,
            endpoint_url: None,
            model_id: None,
            timeout_ms: default_remote_timeout_ms(),
        }
    }
}

impl EmbedderConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dimension < MIN_DIMENSION {
            return Err(EmbedError::InvalidConfig(format!(
                "dimension must be >= {MIN_DIMENSION}, got {}",
                self.dimension
            )));
        }
        if self.ngram_size < 1 {
            return Err(EmbedError::InvalidConfig("ngram_size must be >= 1".into()));
        }
        if self.kind == EmbedderKind::Remote && self.endpoint_url.is_none() {
            return Err(EmbedError::InvalidConfig(
                "remote embedder requires endpoint_url".into(),
            ));
        }
        Ok(())
    }
}

pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    fn dimension(&self) -> usize;

    /// Element-wise [`Embedder::embed`], order preserved; the error carries
    /// the offending index.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts
            .iter()
            .enumerate()
            .map(|(i, text)| {
                self.embed(text).map_err(|e| match e {
                    EmbedError::EmptyText { .. } => EmbedError::EmptyText { index: Some(i) },
                    other => other,
                })
            })
            .collect()
    }
}

/// Hashed character n-gram term-frequency embedder.
#[derive(Debug, Clone)]
pub struct HashedNgramEmbedder {
    dimension: usize,
    ngram_size: usize,
}

impl HashedNgramEmbedder {
    pub fn new(config: &EmbedderConfig) -> Result<Self, EmbedError> {
        config.validate()?;
        Ok(Self {
            dimension: config.dimension,
            ngram_size: config.ngram_size,
        })
    }

    /// Bucket index of one n-gram. FNV-1a 64 over the seed's little-endian
    /// bytes followed by the n-gram's UTF-8 bytes, reduced mod dimension.
    pub fn bucket(&self, gram: &str) -> usize {
        (fnv1a64_seeded(HASH_SEED, gram.as_bytes()) % self.dimension as u64) as usize
    }
}

impl Embedder for HashedNgramEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(EmbedError::EmptyText { index: None });
        }
        let lowered = trimmed.to_lowercase();
        let chars: Vec<char> = lowered.chars().collect();
        let mut counts = vec![0.0f64; self.dimension];
        let mut gram = String::with_capacity(self.ngram_size * 4);
        if chars.len() <= self.ngram_size {
            counts[self.bucket(&lowered)] += 1.0;
        } else {
            for window in chars.windows(self.ngram_size) {
                gram.clear();
                gram.extend(window.iter());
                counts[self.bucket(&gram)] += 1.0;
            }
        }
        let norm = counts.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut counts {
            *v /= norm;
        }
        Ok(EmbeddingVector::new(counts))
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}

/// Build the embedder selected by `config`.
pub fn build_embedder(config: &EmbedderConfig) -> Result<Box<dyn Embedder>, EmbedError> {
    config.validate()?;
    match config.kind {
        EmbedderKind::HashedNgram => Ok(Box::new(HashedNgramEmbedder::new(config)?)),
        EmbedderKind::Remote => Ok(Box::new(RemoteEmbedder::new(
            config,
            std::sync::Arc::new(crate::transport::UreqTransport),
        )?)),
    }
}

fn fnv1a64_seeded(seed: u64, data: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    let mut hash = OFFSET;
    for &b in seed.to_le_bytes().iter().chain(data) {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}
