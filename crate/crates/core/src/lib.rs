//! Local-first log triage: retrieval-augmented anomaly classification for
//! labeled system logs.
//!
//! The pipeline has four stages, each its own module:
//!
//! 1. [`ingest`] — parse labeled log lines into [`ingest::LogRecord`]s.
//! 2. [`embedding`] — deterministic hashed n-gram embeddings (or a remote
//!    embedding service) producing unit-norm vectors.
//! 3. [`sampler`] + [`store`] — cluster the normal entries, sample a
//!    capped, distribution-preserving subset, and persist it in an
//!    exact-retrieval vector store.
//! 4. [`cognition`] + [`backend`] — classify a query entry by retrieving
//!    its best-matched normal entry and walking a staged prompt chain
//!    (explain / decide / reflect) against a chat-completion model.
//!
//! [`evaluator`] runs the full model × strategy grid over a labeled
//! dataset and reports precision/recall/F1.

pub mod backend;
pub mod cli;
pub mod cognition;
pub mod embedding;
pub mod evaluator;
pub mod ingest;
pub mod sampler;
pub mod store;
pub mod transport;
