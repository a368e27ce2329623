//! Command-line front end: build the sample database, analyze one entry,
//! run the evaluation grid, re-render saved reports.

pub mod config;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::backend::{build_backend, BackendError, ChatBackend};
use crate::cognition::{
    run_strategy, CognitionError, PromptBuilder, Strategy, Verdict,
};
use crate::embedding::{build_embedder, EmbedError};
use crate::evaluator::report::{render_report, ReportError, ReportFormat};
use crate::evaluator::{run_experiment, split_records, CellStatus, EvalError, ExperimentMatrix};
use crate::ingest::{load_dataset, normalize, IngestError, LogRecord};
use crate::sampler::{kmeans, select_samples, SamplerError};
use crate::store::{EntryMeta, StoreEntry, StoreError, VectorStore};
pub use config::{ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL_FAILURE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_ANOMALY: i32 = 3;
pub const EXIT_UNPARSEABLE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("embedding: {0}")]
    Embed(#[from] EmbedError),
    #[error("sampler: {0}")]
    Sampler(#[from] SamplerError),
    #[error("store: {0}")]
    Store(#[from] StoreError),
    #[error("backend: {0}")]
    Backend(#[from] BackendError),
    #[error("analysis: {0}")]
    Cognition(#[from] CognitionError),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
    #[error("report: {0}")]
    Report(#[from] ReportError),
    #[error("no store at {0}; run build-index first")]
    StoreMissing(PathBuf),
    #[error("{0}")]
    Other(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "logtriage",
    version,
    about = "Retrieval-augmented anomaly triage for system logs"
)]
pub struct Cli {
    /// JSON config file; flags and --set overrides take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one config field, e.g. --set sampler.cap=500.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Where reports and manifests are written.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Seed for sampling and the train/eval split.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Read at most this many records from the dataset.
    #[arg(long, global = true)]
    pub limit: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OutputFormat {
    Markdown,
    Csv,
    Json,
}

impl From<OutputFormat> for ReportFormat {
    fn from(format: OutputFormat) -> Self {
        match format {
            OutputFormat::Markdown => ReportFormat::Markdown,
            OutputFormat::Csv => ReportFormat::Csv,
            OutputFormat::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster the training normals, sample a capped subset, build and
    /// save the vector store.
    BuildIndex,
    /// Classify one log entry against the stored normals.
    Analyze {
        /// The log entry text (content only, no label token).
        entry: String,
        /// Strategy id; defaults to the first configured strategy.
        #[arg(long)]
        strategy: Option<String>,
        /// Model id; defaults to the first configured model.
        #[arg(long)]
        model: Option<String>,
    },
    /// Run every configured (model, strategy) pair over the evaluation
    /// split and write reports.
    Evaluate {
        /// Restrict to one strategy id.
        #[arg(long)]
        strategy: Option<String>,
        /// Restrict to one model id.
        #[arg(long)]
        model: Option<String>,
    },
    /// Re-render a saved report.json in another format.
    Report {
        /// Path to a report.json produced by evaluate.
        matrix: PathBuf,
        #[arg(long, value_enum, default_value = "markdown")]
        format: OutputFormat,
    },
}

/// Entry point: returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    // `report` reads a saved matrix and needs no run config.
    if let Command::Report { matrix, format } = &cli.command {
        return cmd_report(matrix, (*format).into());
    }

    let mut overrides = cli.overrides.clone();
    if let Some(dir) = &cli.output_dir {
        overrides.push(format!("output_dir={}", dir.display()));
    }
    if let Some(limit) = cli.limit {
        overrides.push(format!("dataset.limit={limit}"));
    }
    if let Some(seed) = cli.seed {
        overrides.push(format!("sampler.seed={seed}"));
        overrides.push(format!("evaluation.split_seed={seed}"));
    }
    match &cli.command {
        Command::Analyze {
            strategy, model, ..
        }
        | Command::Evaluate { strategy, model } => {
            if let Some(strategy) = strategy {
                overrides.push(format!("strategies=[{}]", serde_json::json!(strategy)));
            }
            if let Some(model) = model {
                overrides.push(format!("models=[{}]", serde_json::json!(model)));
            }
        }
        _ => {}
    }
    let config = RunConfig::load(cli.config.as_deref(), &overrides)?;

    match cli.command {
        Command::BuildIndex => cmd_build_index(&config),
        Command::Analyze { entry, .. } => cmd_analyze(&config, &entry),
        Command::Evaluate { .. } => cmd_evaluate(&config),
        Command::Report { .. } => unreachable!("handled above"),
    }
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config_sha256: String,
    dataset_sha256: String,
    sampler_seed: u64,
    split_seed: u64,
    dataset_path: String,
    records_loaded: usize,
    records_skipped: usize,
    started_unix_ms: u128,
    finished_unix_ms: u128,
}

fn file_sha256(path: &Path) -> Result<String, CliError> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path)?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Other(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn load_store(config: &RunConfig) -> Result<VectorStore, CliError> {
    if !config.store_path.exists() {
        return Err(CliError::StoreMissing(config.store_path.clone()));
    }
    Ok(VectorStore::load(&config.store_path)?)
}

fn prompt_builder(config: &RunConfig) -> Result<PromptBuilder, CliError> {
    Ok(PromptBuilder::new(config.template_set()?)
        .with_envelope(config.prompts.include_envelope))
}

pub fn cmd_build_index(config: &RunConfig) -> Result<i32, CliError> {
    let started = unix_ms();
    let loaded = load_dataset(&config.dataset)?;
    eprintln!("loaded {}", loaded.summary);

    let (train, _eval) = split_records(&loaded.records, config.evaluation.split_seed);
    let normals: Vec<LogRecord> = train
        .into_iter()
        .filter(|r| !r.label.is_anomaly())
        .collect();
    if normals.is_empty() {
        return Err(CliError::Other(
            "training partition holds no normal entries".into(),
        ));
    }

    let embedder = build_embedder(&config.embedder)?;
    let texts: Vec<&str> = normals.iter().map(|r| r.content.as_str()).collect();
    let vectors = embedder.embed_batch(&texts)?;
    let model = kmeans(&vectors, &config.sampler)?;
    let (selected, manifest) = select_samples(&normals, &model, &config.sampler)?;

    let by_id: HashMap<u64, usize> = normals
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id, i))
        .collect();
    let mut store = VectorStore::new();
    for record in &selected {
        let index = by_id[&record.id];
        store.insert(StoreEntry {
            entry_id: record.id,
            vector: vectors[index].clone(),
            text: record.content.clone(),
            meta: EntryMeta {
                label: record.label.clone(),
                source: record.source.clone(),
            },
        })?;
    }
    store.seal();

    if let Some(parent) = config.store_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    store.save(&config.store_path)?;
    std::fs::create_dir_all(&config.output_dir)?;
    write_json(&config.output_dir.join("sampling_manifest.json"), &manifest)?;
    write_json(
        &config.output_dir.join("run_manifest.json"),
        &RunManifest {
            command: "build-index",
            config_sha256: config.digest(),
            dataset_sha256: file_sha256(&config.dataset.path)?,
            sampler_seed: config.sampler.seed,
            split_seed: config.evaluation.split_seed,
            dataset_path: config.dataset.path.display().to_string(),
            records_loaded: loaded.summary.records,
            records_skipped: loaded.summary.skipped,
            started_unix_ms: started,
            finished_unix_ms: unix_ms(),
        },
    )?;

    println!("{manifest}");
    println!(
        "store: {} ({} entries, {}-d)",
        config.store_path.display(),
        store.len(),
        store.dimension()
    );
    Ok(EXIT_OK)
}

pub fn cmd_analyze(config: &RunConfig, entry: &str) -> Result<i32, CliError> {
    let store = load_store(config)?;
    let embedder = build_embedder(&config.embedder)?;
    let builder = prompt_builder(config)?;

    let model_id = config.models.first().expect("validated non-empty");
    let backend = build_backend(&config.backend, model_id)?;
    let strategy = config
        .resolved_strategies()
        .into_iter()
        .next()
        .expect("validated non-empty");

    let content = if config.dataset.normalize {
        normalize(entry, true)
    } else {
        entry.trim().to_string()
    };
    if content.is_empty() {
        return Err(CliError::Other("entry text is empty".into()));
    }
    let record = LogRecord {
        id: 0,
        raw: entry.to_string(),
        content,
        label: crate::ingest::Label::Normal, // unknown; not used by analysis
        source: "adhoc".into(),
    };
    let vector = embedder.embed(&record.content)?;
    let hits = store.query_top_k(&vector, 1)?;
    let result = run_strategy(&strategy, &record, &hits[0], backend.as_ref(), &builder)?;

    println!("verdict: {}", result.final_verdict);
    println!(
        "nearest normal entry {} (cosine {:.4}): {}",
        hits[0].entry_id, hits[0].score, hits[0].text
    );
    println!("strategy: {} ({} stages)", strategy.id, result.stages.len());
    if !result.explanation.is_empty() {
        println!("explanation:\n{}", result.explanation);
    }

    Ok(match result.final_verdict {
        Verdict::Normal => EXIT_OK,
        Verdict::Anomaly => EXIT_ANOMALY,
        Verdict::Unparseable => EXIT_UNPARSEABLE,
    })
}

pub fn cmd_evaluate(config: &RunConfig) -> Result<i32, CliError> {
    let started = unix_ms();
    let loaded = load_dataset(&config.dataset)?;
    eprintln!("loaded {}", loaded.summary);

    let (_train, mut eval) = split_records(&loaded.records, config.evaluation.split_seed);
    if let Some(limit) = config.evaluation.limit {
        eval.truncate(limit);
    }

    let store = load_store(config)?;
    let embedder = build_embedder(&config.embedder)?;
    let builder = prompt_builder(config)?;
    let strategies: Vec<Strategy> = config.resolved_strategies();
    let mut backends: Vec<Box<dyn ChatBackend>> = Vec::with_capacity(config.models.len());
    for model in &config.models {
        backends.push(build_backend(&config.backend, model)?);
    }

    let dataset_name = config
        .dataset
        .path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let (matrix, audit) = run_experiment(
        &dataset_name,
        &eval,
        &store,
        embedder.as_ref(),
        &backends,
        &strategies,
        &builder,
        config.evaluation.policy,
    )?;

    std::fs::create_dir_all(&config.output_dir)?;
    let markdown = render_report(&matrix, ReportFormat::Markdown)?;
    std::fs::write(config.output_dir.join("report.md"), &markdown)?;
    std::fs::write(
        config.output_dir.join("report.csv"),
        render_report(&matrix, ReportFormat::Csv)?,
    )?;
    std::fs::write(
        config.output_dir.join("report.json"),
        render_report(&matrix, ReportFormat::Json)?,
    )?;
    let mut audit_lines = String::new();
    for record in &audit {
        audit_lines.push_str(
            &serde_json::to_string(record)
                .map_err(|e| CliError::Other(format!("serialize audit record: {e}")))?,
        );
        audit_lines.push('\n');
    }
    std::fs::write(config.output_dir.join("audit.jsonl"), audit_lines)?;
    write_json(
        &config.output_dir.join("run_manifest.json"),
        &RunManifest {
            command: "evaluate",
            config_sha256: config.digest(),
            dataset_sha256: file_sha256(&config.dataset.path)?,
            sampler_seed: config.sampler.seed,
            split_seed: config.evaluation.split_seed,
            dataset_path: config.dataset.path.display().to_string(),
            records_loaded: loaded.summary.records,
            records_skipped: loaded.summary.skipped,
            started_unix_ms: started,
            finished_unix_ms: unix_ms(),
        },
    )?;

    print!("{markdown}");
    eprintln!("reports written to {}", config.output_dir.display());

    let failed = matrix
        .cells
        .iter()
        .filter(|c| matches!(c.status, CellStatus::Failed(_)))
        .count();
    if failed > 0 {
        eprintln!("{failed}/{} cells failed", matrix.cells.len());
        Ok(EXIT_PARTIAL_FAILURE)
    } else {
        Ok(EXIT_OK)
    }
}

pub fn cmd_report(matrix_path: &Path, format: ReportFormat) -> Result<i32, CliError> {
    let raw = std::fs::read_to_string(matrix_path)?;
    let matrix: ExperimentMatrix = serde_json::from_str(&raw)
        .map_err(|e| CliError::Other(format!("{} is not a report.json: {e}", matrix_path.display())))?;
    print!("{}", render_report(&matrix, format)?);
    Ok(EXIT_OK)
}
