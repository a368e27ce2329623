//! Experiment harness: run every configured (model, strategy) pair over a
//! labeled evaluation set and score the verdicts.

pub mod report;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::ChatBackend;
use crate::cognition::{run_strategy, AnalysisResult, PromptBuilder, Strategy, Verdict};
use crate::embedding::Embedder;
use crate::ingest::{Label, LogRecord};
use crate::store::VectorStore;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("evaluation set is empty")]
    EmptyEvaluationSet,
    #[error("vector store is missing or unusable: {0}")]
    StoreMissing(String),
    #[error("no models configured")]
    NoModels,
    #[error("no strategies configured")]
    NoStrategies,
    #[error("embedder produces {embedder}-d vectors but the store holds {store}-d vectors")]
    DimensionMismatch { embedder: usize, store: usize },
}

/// What to do with a record whose final verdict could not be parsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnparseablePolicy {
    /// Fail closed: a non-answer is treated as an anomaly so a human
    /// looks at it.
    #[default]
    Anomaly,
    Normal,
    /// Drop the record from the confusion counts; tracked separately.
    Exclude,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// Records whose verdict was Unparseable, counted before the policy
    /// maps them to a side.
    pub unparseable_count: u64,
    /// Records dropped by [`UnparseablePolicy::Exclude`].
    pub excluded_count: u64,
}

impl ConfusionMatrix {
    /// Records that contributed to the counts.
    pub fn evaluated(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
        self.unparseable_count += other.unparseable_count;
        self.excluded_count += other.excluded_count;
    }
}

/// Fold one (truth, prediction) pair into the counts.
pub fn accumulate(
    cm: &mut ConfusionMatrix,
    truth: &Label,
    predicted: Verdict,
    policy: UnparseablePolicy,
) {
    let predicted_anomaly = match predicted {
        Verdict::Anomaly => true,
        Verdict::Normal => false,
        Verdict::Unparseable => {
            cm.unparseable_count += 1;
            match policy {
                UnparseablePolicy::Anomaly => true,
                UnparseablePolicy::Normal => false,
                UnparseablePolicy::Exclude => {
                    cm.excluded_count += 1;
                    return;
                }
            }
        }
    };
    match (truth.is_anomaly(), predicted_anomaly) {
        (true, true) => cm.tp += 1,
        (false, true) => cm.fp += 1,
        (false, false) => cm.tn += 1,
        (true, false) => cm.fn_ += 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerateFlag {
    PrecisionUndefined,
    RecallUndefined,
    F1Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Which metrics had a zero denominator and were reported as 0.0.
    pub degenerate_flags: BTreeSet<DegenerateFlag>,
}

pub fn precision(cm: &ConfusionMatrix) -> f64 {
    let denom = cm.tp + cm.fp;
    if denom == 0 {
        0.0
    } else {
        cm.tp as f64 / denom as f64
    }
}

pub fn recall(cm: &ConfusionMatrix) -> f64 {
    let denom = cm.tp + cm.fn_;
    if denom == 0 {
        0.0
    } else {
        cm.tp as f64 / denom as f64
    }
}

pub fn f1(cm: &ConfusionMatrix) -> f64 {
    let p = precision(cm);
    let r = recall(cm);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let mut degenerate_flags = BTreeSet::new();
    if cm.tp + cm.fp == 0 {
        degenerate_flags.insert(DegenerateFlag::PrecisionUndefined);
    }
    if cm.tp + cm.fn_ == 0 {
        degenerate_flags.insert(DegenerateFlag::RecallUndefined);
    }
    let p = precision(cm);
    let r = recall(cm);
    if p + r == 0.0 {
        degenerate_flags.insert(DegenerateFlag::F1Undefined);
    }
    MetricsReport {
        precision: p,
        recall: r,
        f1: f1(cm),
        degenerate_flags,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "error")]
pub enum CellStatus {
    Ok,
    Failed(String),
}

/// Results for one (model, strategy) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub model_id: String,
    pub strategy_id: String,
    pub status: CellStatus,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    /// Wall-clock duration; excluded from deterministic outputs.
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMatrix {
    pub dataset: String,
    pub evaluated_records: usize,
    /// Model-major, strategy-minor, in configuration order.
    pub cells: Vec<ExperimentCell>,
}

/// One line of the per-record audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub record_id: u64,
    pub truth: String,
    pub final_verdict: Verdict,
    pub retrieval_score: f64,
    pub stage_count: usize,
    pub model_id: String,
    pub strategy_id: String,
}

/// Deterministic train/eval partition on record ids.
///
/// A seeded integer hash (splitmix64 finalizer) of each id picks the
/// side, so the split is stable across runs and machines without storing
/// an explicit list.
pub fn split_records(records: &[LogRecord], seed: u64) -> (Vec<LogRecord>, Vec<LogRecord>) {
    let mut train = Vec::new();
    let mut eval = Vec::new();
    for record in records {
        if mix64(record.id ^ seed) & 1 == 0 {
            train.push(record.clone());
        } else {
            eval.push(record.clone());
        }
    }
    (train, eval)
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Classify every record with one backend + strategy. Records are worked
/// in parallel up to the backend's `max_in_flight`, but results are
/// returned — and therefore accumulated — in record order, so the output
/// is identical for any worker count.
fn classify_all(
    records: &[LogRecord],
    store: &VectorStore,
    embedder: &dyn Embedder,
    backend: &dyn ChatBackend,
    strategy: &Strategy,
    builder: &PromptBuilder,
) -> Result<Vec<AnalysisResult>, String> {
    let classify_one = |record: &LogRecord| -> Result<AnalysisResult, String> {
        let vector = embedder
            .embed(&record.content)
            .map_err(|e| format!("embed record {}: {e}", record.id))?;
        let hits = store
            .query_top_k(&vector, 1)
            .map_err(|e| format!("retrieve for record {}: {e}", record.id))?;
        run_strategy(strategy, record, &hits[0], backend, builder)
            .map_err(|e| format!("record {}: {e}", record.id))
    };

    let workers = backend.max_in_flight().clamp(1, records.len().max(1));
    if workers == 1 {
        return records.iter().map(classify_one).collect();
    }

    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let slots: Vec<Mutex<Option<Result<AnalysisResult, String>>>> =
        records.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if failed.load(Ordering::SeqCst) {
                    return;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= records.len() {
                    return;
                }
                let outcome = classify_one(&records[i]);
                if outcome.is_err() {
                    failed.store(true, Ordering::SeqCst);
                }
                *slots[i].lock().unwrap() = Some(outcome);
            });
        }
    });

    // First error in record order wins, independent of scheduling.
    let mut results = Vec::with_capacity(records.len());
    for slot in slots {
        match slot.into_inner().unwrap() {
            Some(Ok(result)) => results.push(result),
            Some(Err(e)) => return Err(e),
            // A later slot can be unclaimed once a failure stops the
            // pool; that only matters if an earlier slot errored.
            None => break,
        }
    }
    if results.len() == records.len() {
        Ok(results)
    } else {
        Err("worker pool stopped early".to_string())
    }
}

/// Run the full model × strategy grid.
///
/// A failing cell (backend down, script exhausted, …) is marked
/// [`CellStatus::Failed`] and the run continues; infrastructure problems
/// that would fail every cell the same way are reported upfront.
#[allow(clippy::too_many_arguments)]
pub fn run_experiment(
    dataset: &str,
    eval_records: &[LogRecord],
    store: &VectorStore,
    embedder: &dyn Embedder,
    backends: &[Box<dyn ChatBackend>],
    strategies: &[Strategy],
    builder: &PromptBuilder,
    policy: UnparseablePolicy,
) -> Result<(ExperimentMatrix, Vec<AuditRecord>), EvalError> {
    if eval_records.is_empty() {
        return Err(EvalError::EmptyEvaluationSet);
    }
    if backends.is_empty() {
        return Err(EvalError::NoModels);
    }
    if strategies.is_empty() {
        return Err(EvalError::NoStrategies);
    }
    if !store.is_sealed() || store.is_empty() {
        return Err(EvalError::StoreMissing(
            "build the sample database first (store must be sealed and non-empty)".into(),
        ));
    }
    if store.dimension() != embedder.dimension() {
        return Err(EvalError::DimensionMismatch {
            embedder: embedder.dimension(),
            store: store.dimension(),
        });
    }

    let mut cells = Vec::with_capacity(backends.len() * strategies.len());
    let mut audit = Vec::new();
    for backend in backends {
        for strategy in strategies {
            let started = Instant::now();
            let outcome = classify_all(
                eval_records,
                store,
                embedder,
                backend.as_ref(),
                strategy,
                builder,
            );
            let wall_ms = started.elapsed().as_millis() as u64;
            match outcome {
                Ok(results) => {
                    let mut confusion = ConfusionMatrix::default();
                    for (record, result) in eval_records.iter().zip(&results) {
                        accumulate(&mut confusion, &record.label, result.final_verdict, policy);
                        audit.push(AuditRecord {
                            record_id: record.id,
                            truth: record.label.to_string(),
                            final_verdict: result.final_verdict,
                            retrieval_score: result.retrieval_score,
                            stage_count: result.stages.len(),
                            model_id: backend.model_id().to_string(),
                            strategy_id: strategy.id.clone(),
                        });
                    }
                    cells.push(ExperimentCell {
                        model_id: backend.model_id().to_string(),
                        strategy_id: strategy.id.clone(),
                        status: CellStatus::Ok,
                        metrics: metrics(&confusion),
                        confusion,
                        wall_ms,
                    });
                }
                Err(error) => {
                    let confusion = ConfusionMatrix::default();
                    cells.push(ExperimentCell {
                        model_id: backend.model_id().to_string(),
                        strategy_id: strategy.id.clone(),
                        status: CellStatus::Failed(error),
                        metrics: metrics(&confusion),
                        confusion,
                        wall_ms,
                    });
                }
            }
        }
    }

    Ok((
        ExperimentMatrix {
            dataset: dataset.to_string(),
            evaluated_records: eval_records.len(),
            cells,
        },
        audit,
    ))
}
