//! Exact-retrieval vector store for the sampled normal entries.
//!
//! The store is small by construction (the sampler caps it at a couple of
//! thousand entries), so retrieval is an exhaustive cosine scan — no
//! approximate index, no recall loss, bit-for-bit reproducible.

use std::collections::HashSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embedding::{cosine, EmbeddingVector};
use crate::ingest::Label;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("duplicate entry id {0}")]
    DuplicateId(u64),
    #[error("dimension mismatch: store holds {expected}-d vectors, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("store is sealed; no further inserts")]
    StoreSealed,
    #[error("store must be sealed before querying")]
    NotSealed,
    #[error("store contains no entries")]
    EmptyStore,
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt store file: {0}")]
    CorruptStore(String),
    #[error("unsupported store schema version {found} (supported: {supported})")]
    VersionMismatch { found: u32, supported: u32 },
}

/// Metadata carried alongside each stored vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryMeta {
    pub label: Label,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub entry_id: u64,
    pub vector: EmbeddingVector,
    pub text: String,
    pub meta: EntryMeta,
}

/// One retrieval result; higher `score` (cosine similarity) is better.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalHit {
    pub entry_id: u64,
    pub score: f64,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct StoreHeader {
    schema_version: u32,
    dimension: usize,
    count: usize,
    checksum: String,
}

/// Build → seal → query. Inserts are only valid before sealing, queries
/// only after, which keeps a persisted store equivalent to a live one.
#[derive(Debug, Default)]
pub struct VectorStore {
    dimension: Option<usize>,
    entries: Vec<StoreEntry>,
    ids: HashSet<u64>,
    sealed: bool,
}

impl VectorStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    /// Dimension fixed by the first insert; 0 while empty.
    pub fn dimension(&self) -> usize {
        self.dimension.unwrap_or(0)
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    pub fn insert(&mut self, entry: StoreEntry) -> Result<(), StoreError> {
        if self.sealed {
            return Err(StoreError::StoreSealed);
        }
        match self.dimension {
            Some(d) if d != entry.vector.dimension() => {
                return Err(StoreError::DimensionMismatch {
                    expected: d,
                    got: entry.vector.dimension(),
                });
            }
            None => self.dimension = Some(entry.vector.dimension()),
            _ => {}
        }
        if !self.ids.insert(entry.entry_id) {
            return Err(StoreError::DuplicateId(entry.entry_id));
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Freeze the store. Entries are put in id order so persistence and
    /// iteration are independent of insertion order. Idempotent.
    pub fn seal(&mut self) {
        if !self.sealed {
            self.entries.sort_by_key(|e| e.entry_id);
            self.sealed = true;
        }
    }

    /// Exhaustive top-k by cosine similarity. Ties break toward the lower
    /// entry id; `k` larger than the store returns every entry.
    pub fn query_top_k(
        &self,
        query: &EmbeddingVector,
        k: usize,
    ) -> Result<Vec<RetrievalHit>, StoreError> {
        if !self.sealed {
            return Err(StoreError::NotSealed);
        }
        if self.entries.is_empty() {
            return Err(StoreError::EmptyStore);
        }
        let dim = self.dimension.expect("non-empty store has a dimension");
        if query.dimension() != dim {
            return Err(StoreError::DimensionMismatch {
                expected: dim,
                got: query.dimension(),
            });
        }
        let mut scored: Vec<(f64, &StoreEntry)> = self
            .entries
            .iter()
            .map(|e| {
                let score = cosine(query, &e.vector).expect("dimensions checked");
                (score, e)
            })
            .collect();
        scored.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| a.1.entry_id.cmp(&b.1.entry_id))
        });
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(score, e)| RetrievalHit {
                entry_id: e.entry_id,
                score,
                text: e.text.clone(),
            })
            .collect())
    }

    /// Persist as line-delimited JSON: a header line with a checksum over
    /// the entry lines, then one entry per line.
    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let mut body = String::new();
        for entry in &self.entries {
            let line = serde_json::to_string(entry)
                .map_err(|e| StoreError::CorruptStore(format!("serialize: {e}")))?;
            body.push_str(&line);
            body.push('\n');
        }
        let header = StoreHeader {
            schema_version: SCHEMA_VERSION,
            dimension: self.dimension(),
            count: self.entries.len(),
            checksum: sha256_hex(body.as_bytes()),
        };
        let header_line = serde_json::to_string(&header)
            .map_err(|e| StoreError::CorruptStore(format!("serialize header: {e}")))?;
        let io_err = |source| StoreError::IoFailure {
            path: path.to_path_buf(),
            source,
        };
        let mut file = fs::File::create(path).map_err(io_err)?;
        writeln!(file, "{header_line}").map_err(io_err)?;
        file.write_all(body.as_bytes()).map_err(io_err)?;
        Ok(())
    }

    /// Load a persisted store; the result is sealed and ready to query.
    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let raw = fs::read_to_string(path).map_err(|source| StoreError::IoFailure {
            path: path.to_path_buf(),
            source,
        })?;
        let mut lines = raw.split_inclusive('\n');
        let header_line = lines
            .next()
            .ok_or_else(|| StoreError::CorruptStore("empty file".into()))?;
        let header: StoreHeader = serde_json::from_str(header_line.trim_end())
            .map_err(|e| StoreError::CorruptStore(format!("bad header: {e}")))?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(StoreError::VersionMismatch {
                found: header.schema_version,
                supported: SCHEMA_VERSION,
            });
        }

        let body = &raw[header_line.len()..];
        let checksum = sha256_hex(body.as_bytes());
        if checksum != header.checksum {
            return Err(StoreError::CorruptStore(format!(
                "checksum mismatch: header says {}, body hashes to {checksum}",
                header.checksum
            )));
        }

        let mut store = VectorStore::new();
        for (i, line) in body.lines().enumerate() {
            let entry: StoreEntry = serde_json::from_str(line)
                .map_err(|e| StoreError::CorruptStore(format!("entry line {}: {e}", i + 1)))?;
            if entry.meta.label.is_anomaly() {
                return Err(StoreError::CorruptStore(format!(
                    "entry {} is labeled anomalous; the store must hold normal entries only",
                    entry.entry_id
                )));
            }
            store.insert(entry).map_err(|e| match e {
                StoreError::DuplicateId(id) => {
                    StoreError::CorruptStore(format!("duplicate entry id {id}"))
                }
                other => other,
            })?;
        }
        if store.entries.len() != header.count {
            return Err(StoreError::CorruptStore(format!(
                "header count {} but {} entries present",
                header.count,
                store.entries.len()
            )));
        }
        if header.count > 0 && store.dimension() != header.dimension {
            return Err(StoreError::CorruptStore(format!(
                "header dimension {} but entries are {}-d",
                header.dimension,
                store.dimension()
            )));
        }
        store.seal();
        Ok(store)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
