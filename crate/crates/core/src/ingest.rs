//! Labeled log dataset ingestion.
//!
//! Reads the raw BGL / Thunderbird releases (one entry per line, first
//! whitespace token is the alert category, `-` meaning non-alert) plus a
//! tab-separated generic format for hand-written test corpora.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("empty line")]
    EmptyLine,
    #[error("label token present but no content follows")]
    MissingContent,
    #[error("unknown generic label {0:?} (expected \"normal\" or \"anomaly\")")]
    UnknownLabel(String),
    #[error("dataset file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("i/o failure reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no parseable lines in {0} ({1} lines skipped)")]
    AllLinesUnparseable(PathBuf, usize),
}

/// Ground-truth label of one log entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "variant", content = "alert_tag")]
pub enum Label {
    Normal,
    /// Alert entry, tagged with the dataset's alert category token.
    Anomaly(String),
}

impl Label {
    pub fn is_anomaly(&self) -> bool {
        matches!(self, Label::Anomaly(_))
    }

    pub fn alert_tag(&self) -> Option<&str> {
        match self {
            Label::Normal => None,
            Label::Anomaly(tag) => Some(tag),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Normal => write!(f, "normal"),
            Label::Anomaly(_) => write!(f, "anomaly"),
        }
    }
}

/// One labeled log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    /// Record ordinal within its dataset; strictly increasing in file order.
    pub id: u64,
    /// Full original line text.
    pub raw: String,
    /// Message portion after the label token (normalized when enabled).
    pub content: String,
    pub label: Label,
    /// Dataset identifier, e.g. the file stem.
    pub source: String,
}

/// Line grammar of the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    /// BlueGene/L raw release: `<alert-tag|-> <rest of line>`.
    Bgl,
    /// Thunderbird raw release: same first-token grammar as BGL.
    Thunderbird,
    /// `label<TAB>message` with label in {normal, anomaly}; for synthetic corpora.
    Generic,
}

/// Where and how to read a dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: DatasetFormat,
    /// Maximum records to read; `None` reads the whole file.
    #[serde(default)]
    pub limit: Option<usize>,
    /// Apply [`normalize`] (with numeric masking) to record content.
    #[serde(default)]
    pub normalize: bool,
}

fn default_format() -> DatasetFormat {
    DatasetFormat::Bgl
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>, format: DatasetFormat) -> Self {
        Self {
            path: path.into(),
            format,
            limit: None,
            normalize: false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Some(limit) = self.limit {
            if limit < 1 {
                return Err("dataset limit must be >= 1".into());
            }
        }
        Ok(())
    }
}

/// Counts reported after a dataset load.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub records: usize,
    pub skipped: usize,
    pub anomalies: usize,
}

impl fmt::Display for LoadSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} records parsed ({} anomalies), {} lines skipped",
            self.records, self.anomalies, self.skipped
        )
    }
}

/// A fully loaded dataset with its load summary.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub records: Vec<LogRecord>,
    pub summary: LoadSummary,
}

/// Parse the label and content fields out of one line.
///
/// BGL/Thunderbird: the first whitespace-delimited token is `-` for normal
/// entries and the alert category otherwise; content is the remainder.
/// Generic: `label<TAB>message`.
pub fn parse_line(line: &str, format: DatasetFormat) -> Result<(Label, String), IngestError> {
    if line.trim().is_empty() {
        return Err(IngestError::EmptyLine);
    }
    match format {
        DatasetFormat::Bgl | DatasetFormat::Thunderbird => {
            let trimmed = line.trim_start();
            let (token, rest) = match trimmed.split_once(char::is_whitespace) {
                Some((token, rest)) => (token, rest.trim()),
                None => (trimmed.trim_end(), ""),
            };
            if rest.is_empty() {
                return Err(IngestError::MissingContent);
            }
            let label = if token == "-" {
                Label::Normal
            } else {
                Label::Anomaly(token.to_string())
            };
            Ok((label, rest.to_string()))
        }
        DatasetFormat::Generic => {
            let (token, rest) = line
                .split_once('\t')
                .ok_or(IngestError::MissingContent)?;
            let rest = rest.trim();
            if rest.is_empty() {
                return Err(IngestError::MissingContent);
            }
            let label = match token.trim() {
                "normal" => Label::Normal,
                "anomaly" => Label::Anomaly("anomaly".to_string()),
                other => return Err(IngestError::UnknownLabel(other.to_string())),
            };
            Ok((label, rest.to_string()))
        }
    }
}

/// Collapse whitespace runs to single spaces and trim the ends; when
/// `mask_numerics` is set, replace each maximal digit run with `<NUM>`.
pub fn normalize(content: &str, mask_numerics: bool) -> String {
    let collapsed = content.split_whitespace().collect::<Vec<_>>().join(" ");
    if !mask_numerics {
        return collapsed;
    }
    let mut out = String::with_capacity(collapsed.len());
    let mut in_digits = false;
    for ch in collapsed.chars() {
        if ch.is_ascii_digit() {
            if !in_digits {
                out.push_str("<NUM>");
                in_digits = true;
            }
        } else {
            in_digits = false;
            out.push(ch);
        }
    }
    out
}

/// Read a dataset in file order, skipping (and counting) unparseable lines.
pub fn load_dataset(spec: &DatasetSpec) -> Result<LoadedDataset, IngestError> {
    if !spec.path.exists() {
        return Err(IngestError::FileNotFound(spec.path.clone()));
    }
    let file = File::open(&spec.path).map_err(|source| IngestError::Io {
        path: spec.path.clone(),
        source,
    })?;
    let source = dataset_id(&spec.path);
    let reader = BufReader::new(file);

    let mut records = Vec::new();
    let mut summary = LoadSummary::default();
    let mut saw_any_line = false;
    for line in reader.lines() {
        let line = line.map_err(|source| IngestError::Io {
            path: spec.path.clone(),
            source,
        })?;
        saw_any_line = true;
        match parse_line(&line, spec.format) {
            Ok((label, content)) => {
                let content = if spec.normalize {
                    normalize(&content, true)
                } else {
                    content
                };
                if label.is_anomaly() {
                    summary.anomalies += 1;
                }
                records.push(LogRecord {
                    id: records.len() as u64,
                    raw: line,
                    content,
                    label,
                    source: source.clone(),
                });
                summary.records += 1;
                if Some(records.len()) == spec.limit {
                    break;
                }
            }
            Err(_) => summary.skipped += 1,
        }
    }

    if records.is_empty() && saw_any_line {
        return Err(IngestError::AllLinesUnparseable(
            spec.path.clone(),
            summary.skipped,
        ));
    }
    Ok(LoadedDataset { records, summary })
}

fn dataset_id(path: &Path) -> String {
    path.file_stem()
        .map(|stem| stem.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}
