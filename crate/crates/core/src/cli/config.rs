//! Run configuration: a JSON file, optionally patched by `--set
//! dotted.key=value` overrides, deserialized and validated as a whole
//! before any command does work.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::BackendConfig;
use crate::cognition::{strategy_from_id, Strategy, TemplateSet};
use crate::embedding::EmbedderConfig;
use crate::evaluator::UnparseablePolicy;
use crate::ingest::DatasetSpec;
use crate::sampler::SamplerConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Parse(serde_json::Error),
    #[error("config does not match the schema: {0}")]
    Schema(serde_json::Error),
    #[error("bad --set override {0:?} (expected dotted.key=value)")]
    BadOverride(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    #[serde(default)]
    pub policy: UnparseablePolicy,
    /// Seed for the train/eval record partition.
    #[serde(default)]
    pub split_seed: u64,
    /// Truncate the evaluation set after the split.
    #[serde(default)]
    pub limit: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            policy: UnparseablePolicy::default(),
            split_seed: 0,
            limit: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptConfig {
    /// Directory of replacement templates; defaults ship in the binary.
    #[serde(default)]
    pub template_dir: Option<PathBuf>,
    /// Append the machine-readable score line to each prompt.
    #[serde(default = "default_true")]
    pub include_envelope: bool,
}

fn default_true() -> bool {
    true
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            template_dir: None,
            include_envelope: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub embedder: EmbedderConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default = "default_store_path")]
    pub store_path: PathBuf,
    #[serde(default)]
    pub backend: BackendConfig,
    /// Model identifiers; one backend per model.
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    /// Strategy ids; see `strategy_from_id` for accepted names.
    #[serde(default = "default_strategies")]
    pub strategies: Vec<String>,
    #[serde(default)]
    pub evaluation: EvalConfig,
    #[serde(default)]
    pub prompts: PromptConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_store_path() -> PathBuf {
    PathBuf::from("logtriage_store.jsonl")
}

fn default_models() -> Vec<String> {
    vec!["similarity-oracle".to_string()]
}

fn default_strategies() -> Vec<String> {
    crate::cognition::STRATEGY_IDS
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("logtriage_out")
}

impl RunConfig {
    /// Read the config file (or start from `{}`), apply `--set`
    /// overrides, deserialize, validate.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut value = match path {
            Some(p) => {
                let raw = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                serde_json::from_str(&raw).map_err(ConfigError::Parse)?
            }
            None => serde_json::Value::Object(Default::default()),
        };
        for raw in overrides {
            apply_override(&mut value, raw)?;
        }
        let config: RunConfig = serde_json::from_value(value).map_err(ConfigError::Schema)?;
        config.validate()?;
        Ok(config)
    }

    /// Check every field group; nothing should fail later for a reason
    /// detectable here.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.dataset.validate().map_err(ConfigError::Invalid)?;
        self.embedder
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.sampler
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.backend
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.models.is_empty() {
            return Err(ConfigError::Invalid("models must not be empty".into()));
        }
        if self.strategies.is_empty() {
            return Err(ConfigError::Invalid("strategies must not be empty".into()));
        }
        for id in &self.strategies {
            strategy_from_id(id).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if let Some(dir) = &self.prompts.template_dir {
            TemplateSet::load_dir(dir).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn resolved_strategies(&self) -> Vec<Strategy> {
        self.strategies
            .iter()
            .map(|id| strategy_from_id(id).expect("validated"))
            .collect()
    }

    pub fn template_set(&self) -> Result<TemplateSet, ConfigError> {
        match &self.prompts.template_dir {
            Some(dir) => TemplateSet::load_dir(dir).map_err(|e| ConfigError::Invalid(e.to_string())),
            None => Ok(TemplateSet::default()),
        }
    }

    /// Canonical serialization hashed into the run manifest.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Apply one `dotted.key=value` override onto the raw JSON tree. The
/// value parses as JSON when it can (numbers, booleans, arrays) and
/// falls back to a plain string (paths, names).
pub fn apply_override(root: &mut serde_json::Value, raw: &str) -> Result<(), ConfigError> {
    let (key, value_text) = raw
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(raw.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::BadOverride(raw.to_string()));
    }
    let leaf: serde_json::Value = serde_json::from_str(value_text)
        .unwrap_or_else(|_| serde_json::Value::String(value_text.to_string()));

    let mut node = root;
    let segments: Vec<&str> = key.split('.').collect();
    for segment in &segments[..segments.len() - 1] {
        if !node.is_object() {
            return Err(ConfigError::BadOverride(format!(
                "{raw:?}: {segment:?} is not an object"
            )));
        }
        node = node
            .as_object_mut()
            .expect("checked")
            .entry(segment.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    let last = segments.last().expect("non-empty key");
    match node.as_object_mut() {
        Some(map) => {
            map.insert(last.to_string(), leaf);
            Ok(())
        }
        None => Err(ConfigError::BadOverride(format!(
            "{raw:?}: parent of {last:?} is not an object"
        ))),
    }
}
