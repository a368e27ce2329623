//! C ABI over the logtriage pipeline.
//!
//! The unit of use is an opaque [`lt_analyzer`] handle, constructed from
//! the same JSON configuration the CLI reads. `lt_analyze` classifies one
//! log entry against the configured vector store and hands back a verdict
//! code plus an optional JSON result document.
//!
//! Conventions:
//! - Every function returns [`LtStatus`] (or NULL for constructors);
//!   `LT_STATUS_OK` is 0.
//! - On failure a human-readable message is stored per thread; fetch it
//!   with `lt_last_error_message` and release it with `lt_string_free`.
//! - Strings returned through out-parameters are heap-allocated and must
//!   be released with `lt_string_free`. `lt_version` returns a static
//!   string that must not be freed.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use logtriage::backend::build_backend;
use logtriage::cli::RunConfig;
use logtriage::cognition::{run_strategy, strategy_from_id, PromptBuilder, Verdict};
use logtriage::embedding::Embedder;
use logtriage::ingest::{normalize, Label, LogRecord};
use logtriage::store::VectorStore;
use serde::Serialize;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[allow(non_camel_case_types, clippy::upper_case_acronyms)]
pub enum LtStatus {
    /// The call succeeded.
    LT_STATUS_OK = 0,
    /// A required pointer argument was NULL.
    LT_STATUS_NULL_ARGUMENT = 1,
    /// A string argument was not valid UTF-8.
    LT_STATUS_INVALID_UTF8 = 2,
    /// The configuration did not parse or validate.
    LT_STATUS_BAD_CONFIG = 3,
    /// The vector store could not be loaded or queried.
    LT_STATUS_STORE_FAILURE = 4,
    /// An argument named an unknown strategy, or was otherwise unusable.
    LT_STATUS_INVALID_ARGUMENT = 5,
    /// The analysis chain failed (backend error, missing context, …).
    LT_STATUS_ANALYSIS_FAILURE = 6,
    /// An internal invariant broke; this is a bug in the library.
    LT_STATUS_INTERNAL = 7,
}

/// Verdict codes written to `lt_analyze`'s out-parameter.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[allow(non_camel_case_types)]
pub enum LtVerdict {
    LT_VERDICT_NORMAL = 0,
    LT_VERDICT_ANOMALY = 1,
    LT_VERDICT_UNPARSEABLE = 2,
}

/// Opaque analyzer: configuration, sealed vector store, embedder, and
/// prompt templates, ready to classify entries.
#[allow(non_camel_case_types)]
pub struct lt_analyzer {
    config: RunConfig,
    store: VectorStore,
    embedder: Box<dyn Embedder>,
    builder: PromptBuilder,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let stored = CString::new(message.replace('\0', "\\0"))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(stored));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// The message for the most recent failure on this thread, or NULL if the
/// last call succeeded. The caller owns the returned string; release it
/// with `lt_string_free`.
#[no_mangle]
pub extern "C" fn lt_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(message) => message.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// The library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn lt_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Release a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be a pointer previously returned by this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn lt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn required_str<'a>(
    pointer: *const c_char,
    what: &str,
) -> Result<&'a str, LtStatus> {
    if pointer.is_null() {
        set_last_error(format!("{what} must not be NULL"));
        return Err(LtStatus::LT_STATUS_NULL_ARGUMENT);
    }
    CStr::from_ptr(pointer).to_str().map_err(|_| {
        set_last_error(format!("{what} is not valid UTF-8"));
        LtStatus::LT_STATUS_INVALID_UTF8
    })
}

unsafe fn optional_str<'a>(
    pointer: *const c_char,
    what: &str,
) -> Result<Option<&'a str>, LtStatus> {
    if pointer.is_null() {
        return Ok(None);
    }
    required_str(pointer, what).map(Some)
}

/// Build an analyzer from a JSON configuration document (the same schema
/// the `logtriage` CLI reads). The store referenced by `store_path` must
/// already exist — build it with `logtriage build-index`.
///
/// Returns NULL on failure; see `lt_last_error_message`.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string or NULL.
#[no_mangle]
pub unsafe extern "C" fn lt_analyzer_new(config_json: *const c_char) -> *mut lt_analyzer {
    clear_last_error();
    let raw = match required_str(config_json, "config_json") {
        Ok(raw) => raw,
        Err(_) => return ptr::null_mut(),
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| build_analyzer(raw)));
    match outcome {
        Ok(Ok(analyzer)) => Box::into_raw(Box::new(analyzer)),
        Ok(Err(message)) => {
            set_last_error(message);
            ptr::null_mut()
        }
        Err(_) => {
            set_last_error("internal panic while building the analyzer".to_string());
            ptr::null_mut()
        }
    }
}

fn build_analyzer(raw: &str) -> Result<lt_analyzer, String> {
    let config: RunConfig =
        serde_json::from_str(raw).map_err(|e| format!("config does not parse: {e}"))?;
    config
        .validate()
        .map_err(|e| format!("config is invalid: {e}"))?;
    if !config.store_path.exists() {
        return Err(format!(
            "no store at {}; run `logtriage build-index` first",
            config.store_path.display()
        ));
    }
    let store = VectorStore::load(&config.store_path)
        .map_err(|e| format!("store failed to load: {e}"))?;
    let embedder = logtriage::embedding::build_embedder(&config.embedder)
        .map_err(|e| format!("embedder: {e}"))?;
    let builder = PromptBuilder::new(
        config
            .template_set()
            .map_err(|e| format!("templates: {e}"))?,
    )
    .with_envelope(config.prompts.include_envelope);
    Ok(lt_analyzer {
        config,
        store,
        embedder,
        builder,
    })
}

/// Destroy an analyzer. NULL is a no-op.
///
/// # Safety
/// `analyzer` must be a pointer from `lt_analyzer_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lt_analyzer_free(analyzer: *mut lt_analyzer) {
    if !analyzer.is_null() {
        drop(Box::from_raw(analyzer));
    }
}

#[derive(Serialize)]
struct AnalysisJson<'a> {
    verdict: &'a str,
    explanation: &'a str,
    retrieved_entry_id: u64,
    retrieved_text: &'a str,
    retrieval_score: f64,
    stage_count: usize,
    strategy: &'a str,
    model: &'a str,
}

/// Classify one log entry (message text only, no label token).
///
/// `strategy` and `model` may be NULL to use the first configured values.
/// On success writes the verdict code (`LtVerdict`) to `verdict_out`, and,
/// when `result_json_out` is non-NULL, a JSON document describing the
/// analysis (free it with `lt_string_free`).
///
/// # Safety
/// All pointer arguments must be valid; string arguments must be
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lt_analyze(
    analyzer: *const lt_analyzer,
    entry: *const c_char,
    strategy: *const c_char,
    model: *const c_char,
    verdict_out: *mut c_int,
    result_json_out: *mut *mut c_char,
) -> LtStatus {
    clear_last_error();
    if analyzer.is_null() || verdict_out.is_null() {
        set_last_error("analyzer and verdict_out must not be NULL".to_string());
        return LtStatus::LT_STATUS_NULL_ARGUMENT;
    }
    let analyzer = &*analyzer;
    let entry = match required_str(entry, "entry") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let strategy = match optional_str(strategy, "strategy") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let model = match optional_str(model, "model") {
        Ok(s) => s,
        Err(status) => return status,
    };

    let outcome = catch_unwind(AssertUnwindSafe(|| {
        analyze_entry(analyzer, entry, strategy, model)
    }));
    match outcome {
        Ok(Ok((verdict, json))) => {
            *verdict_out = match verdict {
                Verdict::Normal => LtVerdict::LT_VERDICT_NORMAL as c_int,
                Verdict::Anomaly => LtVerdict::LT_VERDICT_ANOMALY as c_int,
                Verdict::Unparseable => LtVerdict::LT_VERDICT_UNPARSEABLE as c_int,
            };
            if !result_json_out.is_null() {
                match CString::new(json) {
                    Ok(owned) => *result_json_out = owned.into_raw(),
                    Err(_) => *result_json_out = ptr::null_mut(),
                }
            }
            LtStatus::LT_STATUS_OK
        }
        Ok(Err((status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic during analysis".to_string());
            LtStatus::LT_STATUS_INTERNAL
        }
    }
}

fn analyze_entry(
    analyzer: &lt_analyzer,
    entry: &str,
    strategy_id: Option<&str>,
    model_id: Option<&str>,
) -> Result<(Verdict, String), (LtStatus, String)> {
    let invalid = |message: String| (LtStatus::LT_STATUS_INVALID_ARGUMENT, message);

    let content = if analyzer.config.dataset.normalize {
        normalize(entry, true)
    } else {
        entry.trim().to_string()
    };
    if content.is_empty() {
        return Err(invalid("entry text is empty".to_string()));
    }

    let strategy_id = strategy_id
        .unwrap_or_else(|| analyzer.config.strategies[0].as_str());
    let strategy = strategy_from_id(strategy_id).map_err(|e| invalid(e.to_string()))?;
    let model_id = model_id.unwrap_or_else(|| analyzer.config.models[0].as_str());
    if model_id.trim().is_empty() {
        return Err(invalid("model id is empty".to_string()));
    }
    let backend = build_backend(&analyzer.config.backend, model_id)
        .map_err(|e| invalid(format!("backend: {e}")))?;

    let vector = analyzer
        .embedder
        .embed(&content)
        .map_err(|e| invalid(format!("embedding: {e}")))?;
    let hits = analyzer
        .store
        .query_top_k(&vector, 1)
        .map_err(|e| (LtStatus::LT_STATUS_STORE_FAILURE, format!("retrieval: {e}")))?;

    let record = LogRecord {
        id: 0,
        raw: entry.to_string(),
        content,
        label: Label::Normal, // unknown; analysis never reads it
        source: "ffi".to_string(),
    };
    let result = run_strategy(&strategy, &record, &hits[0], backend.as_ref(), &analyzer.builder)
        .map_err(|e| (LtStatus::LT_STATUS_ANALYSIS_FAILURE, e.to_string()))?;

    let json = serde_json::to_string(&AnalysisJson {
        verdict: result.final_verdict.as_token(),
        explanation: &result.explanation,
        retrieved_entry_id: result.retrieved_entry_id,
        retrieved_text: &hits[0].text,
        retrieval_score: result.retrieval_score,
        stage_count: result.stages.len(),
        strategy: &strategy.id,
        model: model_id,
    })
    .map_err(|e| (LtStatus::LT_STATUS_INTERNAL, format!("serialize result: {e}")))?;

    Ok((result.final_verdict, json))
}
