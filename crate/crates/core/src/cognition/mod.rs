//! Staged analysis of one log entry: explain, decide, reflect.
//!
//! A classification is not one model call but an ordered chain of
//! smaller tasks. Each stage sees the query entry, its best-matched
//! normal entry, and whatever earlier stages produced; the closing
//! reflection stage re-examines the provisional conclusion and may
//! overturn it.

pub mod prompt;

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, ChatBackend, ChatRequest};
use crate::ingest::LogRecord;
use crate::store::RetrievalHit;
pub use prompt::{PromptBuilder, TemplateSet};

#[derive(Debug, Error)]
pub enum CognitionError {
    #[error("unknown strategy {0:?} (expected one of {{E,D}}+R, {{D,E}}+R, E+D+R, D+E+R)")]
    UnknownStrategy(String),
    #[error("unusable template for {kind:?}: {reason}")]
    UnknownTemplate { kind: StageKind, reason: String },
    #[error("{kind:?} stage requires {what} from a preceding stage")]
    MissingContext { kind: StageKind, what: String },
    #[error("backend failed during {stage:?} stage: {source}")]
    BackendFailure {
        stage: StageKind,
        /// Stages that completed before the failure.
        completed: Vec<StageOutput>,
        #[source]
        source: BackendError,
    },
}

/// The atomic analysis tasks a stage can perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Explain,
    Decide,
    /// Explain then decide in a single prompt (undecomposed).
    ExplainDecide,
    /// Decide then explain in a single prompt (undecomposed).
    DecideExplain,
    Reflect,
}

impl StageKind {
    pub const ALL: [StageKind; 5] = [
        StageKind::Explain,
        StageKind::Decide,
        StageKind::ExplainDecide,
        StageKind::DecideExplain,
        StageKind::Reflect,
    ];

    /// Stages whose reply carries reasoning text for the analyst.
    pub fn bears_explanation(self) -> bool {
        matches!(
            self,
            StageKind::Explain | StageKind::ExplainDecide | StageKind::DecideExplain
        )
    }

    /// Stages whose reply is parsed for a verdict.
    pub fn bears_decision(self) -> bool {
        matches!(
            self,
            StageKind::Decide
                | StageKind::ExplainDecide
                | StageKind::DecideExplain
                | StageKind::Reflect
        )
    }

    pub fn template_name(self) -> &'static str {
        match self {
            StageKind::Explain => "explain",
            StageKind::Decide => "decide",
            StageKind::ExplainDecide => "explain_decide",
            StageKind::DecideExplain => "decide_explain",
            StageKind::Reflect => "reflect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Normal,
    Anomaly,
    /// The reply matched neither the output contract nor the keyword scan.
    Unparseable,
}

impl Verdict {
    /// Upper-case token used in prompts and terminal output.
    pub fn as_token(self) -> &'static str {
        match self {
            Verdict::Normal => "NORMAL",
            Verdict::Anomaly => "ANOMALY",
            Verdict::Unparseable => "UNDETERMINED",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_token())
    }
}

/// An ordered chain of stages, ending in reflection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub id: String,
    pub chain: Vec<StageKind>,
}

/// The four experiment arms, in report column order.
pub const STRATEGY_IDS: [&str; 4] = ["{E,D}+R", "{D,E}+R", "E+D+R", "D+E+R"];

/// Resolve a strategy name; aliases `ED+R`, `DE+R`, `EDR`, `DER` map to
/// the canonical braced forms.
pub fn strategy_from_id(id: &str) -> Result<Strategy, CognitionError> {
    let normalized: String = id
        .trim()
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_uppercase();
    let (canonical, chain) = match normalized.as_str() {
        "{E,D}+R" | "ED+R" => ("{E,D}+R", vec![StageKind::ExplainDecide, StageKind::Reflect]),
        "{D,E}+R" | "DE+R" => ("{D,E}+R", vec![StageKind::DecideExplain, StageKind::Reflect]),
        "E+D+R" | "EDR" => (
            "E+D+R",
            vec![StageKind::Explain, StageKind::Decide, StageKind::Reflect],
        ),
        "D+E+R" | "DER" => (
            "D+E+R",
            vec![StageKind::Decide, StageKind::Explain, StageKind::Reflect],
        ),
        _ => return Err(CognitionError::UnknownStrategy(id.to_string())),
    };
    Ok(Strategy {
        id: canonical.to_string(),
        chain,
    })
}

pub fn all_strategies() -> Vec<Strategy> {
    STRATEGY_IDS
        .iter()
        .map(|id| strategy_from_id(id).expect("canonical ids resolve"))
        .collect()
}

/// Everything a stage prompt may draw on.
#[derive(Debug, Clone, Copy)]
pub struct PromptContext<'a> {
    pub query_log: &'a str,
    pub retrieved_log: &'a str,
    pub retrieval_score: f64,
    pub prior_explanation: Option<&'a str>,
    pub prior_verdict: Option<Verdict>,
}

/// The record of one executed stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutput {
    pub task_kind: StageKind,
    pub raw_reply: String,
    /// Present for every decision-bearing stage, absent for pure Explain.
    pub parsed_verdict: Option<Verdict>,
    /// Reasoning text with any trailing verdict marker stripped; present
    /// for explanation-bearing stages.
    pub explanation: Option<String>,
}

/// Final outcome for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub record_id: u64,
    pub final_verdict: Verdict,
    /// Reasoning shown to the analyst, from the latest explanation-bearing
    /// stage.
    pub explanation: String,
    pub stages: Vec<StageOutput>,
    pub retrieved_entry_id: u64,
    pub retrieval_score: f64,
}

static VERDICT_MARKER: OnceLock<Regex> = OnceLock::new();
static VERDICT_LINE: OnceLock<Regex> = OnceLock::new();

fn verdict_marker() -> &'static Regex {
    VERDICT_MARKER.get_or_init(|| Regex::new(r"(?i)VERDICT:\s*(NORMAL|ANOMALY)").unwrap())
}

fn verdict_line() -> &'static Regex {
    VERDICT_LINE
        .get_or_init(|| Regex::new(r"(?i)^\s*VERDICT:\s*(NORMAL|ANOMALY)\s*[.!]?\s*$").unwrap())
}

/// Extract a verdict from a model reply.
///
/// Precedence: the last `VERDICT: …` marker wins; failing that, a
/// whole-word scan decides if exactly one side's keywords appear; failing
/// both, the reply is unparseable.
pub fn parse_verdict(reply: &str) -> Verdict {
    if let Some(captures) = verdict_marker().captures_iter(reply).last() {
        return if captures[1].eq_ignore_ascii_case("ANOMALY") {
            Verdict::Anomaly
        } else {
            Verdict::Normal
        };
    }

    let mut saw_anomalous = false;
    let mut saw_normal = false;
    for word in reply.split(|c: char| !c.is_ascii_alphabetic()) {
        if word.is_empty() {
            continue;
        }
        if word.eq_ignore_ascii_case("anomaly")
            || word.eq_ignore_ascii_case("anomalous")
            || word.eq_ignore_ascii_case("abnormal")
        {
            saw_anomalous = true;
        } else if word.eq_ignore_ascii_case("normal")
            || word.eq_ignore_ascii_case("benign")
            || word.eq_ignore_ascii_case("expected")
        {
            saw_normal = true;
        }
    }
    match (saw_anomalous, saw_normal) {
        (true, false) => Verdict::Anomaly,
        (false, true) => Verdict::Normal,
        _ => Verdict::Unparseable,
    }
}

/// Reasoning text for the analyst: the reply minus a trailing line that
/// is nothing but the verdict marker.
fn extract_explanation(reply: &str) -> String {
    let trimmed = reply.trim_end();
    match trimmed.rsplit_once('\n') {
        Some((head, last)) if verdict_line().is_match(last) => head.trim_end().to_string(),
        None if verdict_line().is_match(trimmed) => String::new(),
        _ => trimmed.to_string(),
    }
}

/// Execute a strategy chain for one record: one backend call per stage,
/// each stage's prompt built from the outputs of the stages before it.
pub fn run_strategy(
    strategy: &Strategy,
    record: &LogRecord,
    hit: &RetrievalHit,
    backend: &dyn ChatBackend,
    builder: &PromptBuilder,
) -> Result<AnalysisResult, CognitionError> {
    let mut prior_explanation: Option<String> = None;
    let mut prior_verdict: Option<Verdict> = None;
    let mut stages: Vec<StageOutput> = Vec::with_capacity(strategy.chain.len());

    for &kind in &strategy.chain {
        let ctx = PromptContext {
            query_log: &record.content,
            retrieved_log: &hit.text,
            retrieval_score: hit.score,
            prior_explanation: prior_explanation.as_deref(),
            prior_verdict,
        };
        let messages = builder.build(kind, &ctx)?;
        let reply = match backend.complete(&ChatRequest::new(messages)) {
            Ok(response) => response.content,
            Err(source) => {
                return Err(CognitionError::BackendFailure {
                    stage: kind,
                    completed: stages,
                    source,
                });
            }
        };

        let parsed_verdict = kind.bears_decision().then(|| parse_verdict(&reply));
        let explanation = kind.bears_explanation().then(|| extract_explanation(&reply));
        if kind.bears_explanation() {
            // Chain the full reply so the next prompt quotes this stage
            // verbatim.
            prior_explanation = Some(reply.clone());
        }
        if let Some(verdict) = parsed_verdict {
            prior_verdict = Some(verdict);
        }
        stages.push(StageOutput {
            task_kind: kind,
            raw_reply: reply,
            parsed_verdict,
            explanation,
        });
    }

    // Reflection is the last stage, so scanning decision verdicts from
    // the back applies "reflect wins, else the latest parseable decision".
    let final_verdict = stages
        .iter()
        .rev()
        .filter_map(|s| s.parsed_verdict)
        .find(|v| *v != Verdict::Unparseable)
        .unwrap_or(Verdict::Unparseable);
    let explanation = stages
        .iter()
        .rev()
        .find_map(|s| s.explanation.clone())
        .unwrap_or_default();

    Ok(AnalysisResult {
        record_id: record.id,
        final_verdict,
        explanation,
        stages,
        retrieved_entry_id: hit.entry_id,
        retrieval_score: hit.score,
    })
}
