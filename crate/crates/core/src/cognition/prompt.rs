//! Prompt templates and message assembly for the staged analysis tasks.
//!
//! One template per task kind, shared across strategies so that chain
//! order is the only variable between experiment arms. Templates are
//! plain text with `{placeholder}` tokens; a line that references a
//! prior-stage value is dropped when no prior stage has produced one.

use std::fmt::Write as _;
use std::path::Path;

use super::{CognitionError, PromptContext, StageKind};
use crate::backend::ChatMessage;

pub const PLACEHOLDER_QUERY_LOG: &str = "{query_log}";
pub const PLACEHOLDER_RETRIEVED_LOG: &str = "{retrieved_log}";
pub const PLACEHOLDER_RETRIEVAL_SCORE: &str = "{retrieval_score}";
pub const PLACEHOLDER_PRIOR_EXPLANATION: &str = "{prior_explanation}";
pub const PLACEHOLDER_PRIOR_VERDICT: &str = "{prior_verdict}";

const DEFAULT_EXPLAIN: &str = include_str!("../../templates/explain.txt");
const DEFAULT_DECIDE: &str = include_str!("../../templates/decide.txt");
const DEFAULT_EXPLAIN_DECIDE: &str = include_str!("../../templates/explain_decide.txt");
const DEFAULT_DECIDE_EXPLAIN: &str = include_str!("../../templates/decide_explain.txt");
const DEFAULT_REFLECT: &str = include_str!("../../templates/reflect.txt");

const ANALYST_ROLE: &str = "You are an expert log analyst reviewing entries from a \
    high-performance computing system. For each query entry you are shown the most similar \
    entry from a database of known-normal log lines.";

const VERDICT_CONTRACT: &str =
    "End your reply with VERDICT: NORMAL or VERDICT: ANOMALY.";

/// Placeholders a template must contain to serve its task kind.
fn required_placeholders(kind: StageKind) -> &'static [&'static str] {
    match kind {
        StageKind::Reflect => &[
            PLACEHOLDER_QUERY_LOG,
            PLACEHOLDER_PRIOR_EXPLANATION,
            PLACEHOLDER_PRIOR_VERDICT,
        ],
        _ => &[PLACEHOLDER_QUERY_LOG, PLACEHOLDER_RETRIEVED_LOG],
    }
}

/// The user-message template for each task kind.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    explain: String,
    decide: String,
    explain_decide: String,
    decide_explain: String,
    reflect: String,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self {
            explain: DEFAULT_EXPLAIN.to_string(),
            decide: DEFAULT_DECIDE.to_string(),
            explain_decide: DEFAULT_EXPLAIN_DECIDE.to_string(),
            decide_explain: DEFAULT_DECIDE_EXPLAIN.to_string(),
            reflect: DEFAULT_REFLECT.to_string(),
        }
    }
}

impl TemplateSet {
    /// Load `<kind>.txt` files from a directory, e.g. `explain.txt`.
    pub fn load_dir(dir: &Path) -> Result<Self, CognitionError> {
        let mut set = Self::default();
        for kind in StageKind::ALL {
            let path = dir.join(format!("{}.txt", kind.template_name()));
            let text = std::fs::read_to_string(&path).map_err(|e| {
                CognitionError::UnknownTemplate {
                    kind,
                    reason: format!("cannot read {}: {e}", path.display()),
                }
            })?;
            *set.template_mut(kind) = text;
        }
        set.validate()?;
        Ok(set)
    }

    pub fn template(&self, kind: StageKind) -> &str {
        match kind {
            StageKind::Explain => &self.explain,
            StageKind::Decide => &self.decide,
            StageKind::ExplainDecide => &self.explain_decide,
            StageKind::DecideExplain => &self.decide_explain,
            StageKind::Reflect => &self.reflect,
        }
    }

    fn template_mut(&mut self, kind: StageKind) -> &mut String {
        match kind {
            StageKind::Explain => &mut self.explain,
            StageKind::Decide => &mut self.decide,
            StageKind::ExplainDecide => &mut self.explain_decide,
            StageKind::DecideExplain => &mut self.decide_explain,
            StageKind::Reflect => &mut self.reflect,
        }
    }

    /// Every kind's template must mention the placeholders that kind
    /// cannot work without.
    pub fn validate(&self) -> Result<(), CognitionError> {
        for kind in StageKind::ALL {
            let text = self.template(kind);
            for placeholder in required_placeholders(kind) {
                if !text.contains(placeholder) {
                    return Err(CognitionError::UnknownTemplate {
                        kind,
                        reason: format!("template lacks required placeholder {placeholder}"),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PromptBuilder {
    templates: TemplateSet,
    /// Append the machine-readable `CTX score=<value>` line. On by
    /// default; turn off for production prompts.
    pub include_envelope: bool,
}

impl Default for PromptBuilder {
    fn default() -> Self {
        Self::new(TemplateSet::default())
    }
}

impl PromptBuilder {
    pub fn new(templates: TemplateSet) -> Self {
        Self {
            templates,
            include_envelope: true,
        }
    }

    pub fn with_envelope(mut self, include_envelope: bool) -> Self {
        self.include_envelope = include_envelope;
        self
    }

    /// Assemble the system + user messages for one stage.
    pub fn build(
        &self,
        kind: StageKind,
        ctx: &PromptContext<'_>,
    ) -> Result<Vec<ChatMessage>, CognitionError> {
        if kind == StageKind::Reflect {
            if ctx.prior_explanation.is_none() {
                return Err(CognitionError::MissingContext {
                    kind,
                    what: "prior_explanation".into(),
                });
            }
            if ctx.prior_verdict.is_none() {
                return Err(CognitionError::MissingContext {
                    kind,
                    what: "prior_verdict".into(),
                });
            }
        }

        let mut system = ANALYST_ROLE.to_string();
        if kind.bears_decision() {
            write!(system, " {VERDICT_CONTRACT}").expect("string write");
        }

        let mut user = render_template(self.templates.template(kind), ctx);
        if self.include_envelope {
            if !user.ends_with('\n') {
                user.push('\n');
            }
            // Full-precision score so a reader can recover it exactly.
            write!(user, "CTX score={}", ctx.retrieval_score).expect("string write");
        }

        Ok(vec![ChatMessage::system(system), ChatMessage::user(user)])
    }
}

fn render_template(template: &str, ctx: &PromptContext<'_>) -> String {
    let mut out = String::with_capacity(template.len() + ctx.query_log.len());
    let mut first = true;
    for line in template.lines() {
        // Lines referencing a prior-stage value vanish when no prior
        // stage has run; the same template serves every chain position.
        if line.contains(PLACEHOLDER_PRIOR_EXPLANATION) && ctx.prior_explanation.is_none() {
            continue;
        }
        if line.contains(PLACEHOLDER_PRIOR_VERDICT) && ctx.prior_verdict.is_none() {
            continue;
        }
        let mut rendered = line
            .replace(PLACEHOLDER_QUERY_LOG, ctx.query_log)
            .replace(PLACEHOLDER_RETRIEVED_LOG, ctx.retrieved_log)
            .replace(
                PLACEHOLDER_RETRIEVAL_SCORE,
                &format!("{:.4}", ctx.retrieval_score),
            );
        if let Some(explanation) = ctx.prior_explanation {
            rendered = rendered.replace(PLACEHOLDER_PRIOR_EXPLANATION, explanation);
        }
        if let Some(verdict) = ctx.prior_verdict {
            rendered = rendered.replace(PLACEHOLDER_PRIOR_VERDICT, verdict.as_token());
        }
        if !first {
            out.push('\n');
        }
        out.push_str(&rendered);
        first = false;
    }
    // Collapse the double blank line left where a dropped line sat
    // between paragraphs.
    while out.contains("\n\n\n") {
        out = out.replace("\n\n\n", "\n\n");
    }
    out.trim_end().to_string()
}
