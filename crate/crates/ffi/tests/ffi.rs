//! Drives the exported C functions end to end: build a store on disk,
//! construct an analyzer from config JSON, classify entries, and check
//! the error paths leave a readable message behind.

use std::ffi::{c_char, c_int, CStr, CString};
use std::path::Path;
use std::ptr;

use logtriage::embedding::{build_embedder, EmbedderConfig};
use logtriage::ingest::Label;
use logtriage::store::{EntryMeta, StoreEntry, VectorStore};
use logtriage_ffi::{
    lt_analyze, lt_analyzer_free, lt_analyzer_new, lt_last_error_message, lt_string_free,
    lt_version, LtStatus,
};

const NORMALS: [&str; 3] = [
    "instruction cache parity error corrected",
    "generating core file for application process",
    "ciod received message from node card link",
];

fn write_store(path: &Path) {
    let embedder = build_embedder(&EmbedderConfig::default()).unwrap();
    let mut store = VectorStore::new();
    for (i, text) in NORMALS.iter().enumerate() {
        store
            .insert(StoreEntry {
                entry_id: i as u64,
                vector: embedder.embed(text).unwrap(),
                text: text.to_string(),
                meta: EntryMeta {
                    label: Label::Normal,
                    source: "ffi-test".to_string(),
                },
            })
            .unwrap();
    }
    store.seal();
    store.save(path).unwrap();
}

fn config_json(dir: &Path) -> CString {
    let store = dir.join("store.jsonl");
    write_store(&store);
    let config = serde_json::json!({
        "dataset": {"path": dir.join("unused.log"), "format": "generic"},
        "store_path": store,
        "output_dir": dir.join("out"),
    });
    CString::new(config.to_string()).unwrap()
}

fn take_last_error() -> String {
    unsafe {
        let raw = lt_last_error_message();
        assert!(!raw.is_null(), "expected an error message");
        let text = CStr::from_ptr(raw).to_string_lossy().into_owned();
        lt_string_free(raw);
        text
    }
}

fn analyze(
    analyzer: *mut logtriage_ffi::lt_analyzer,
    entry: &str,
    strategy: Option<&str>,
) -> (LtStatus, c_int, Option<String>) {
    let entry = CString::new(entry).unwrap();
    let strategy = strategy.map(|s| CString::new(s).unwrap());
    let mut verdict: c_int = -1;
    let mut json: *mut c_char = ptr::null_mut();
    let status = unsafe {
        lt_analyze(
            analyzer,
            entry.as_ptr(),
            strategy.as_ref().map_or(ptr::null(), |s| s.as_ptr()),
            ptr::null(),
            &mut verdict,
            &mut json,
        )
    };
    let document = if json.is_null() {
        None
    } else {
        let text = unsafe { CStr::from_ptr(json) }.to_string_lossy().into_owned();
        unsafe { lt_string_free(json) };
        Some(text)
    };
    (status, verdict, document)
}

#[test]
fn version_is_the_crate_version() {
    let version = unsafe { CStr::from_ptr(lt_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn analyze_classifies_against_the_stored_normals() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_json(dir.path());
    let analyzer = unsafe { lt_analyzer_new(config.as_ptr()) };
    assert!(!analyzer.is_null(), "{}", take_last_error());

    // Text identical to a stored normal scores 1.0 → NORMAL (0).
    let (status, verdict, json) = analyze(analyzer, NORMALS[0], None);
    assert_eq!(status, LtStatus::LT_STATUS_OK);
    assert_eq!(verdict, 0);
    let document: serde_json::Value = serde_json::from_str(&json.unwrap()).unwrap();
    assert_eq!(document["verdict"], "NORMAL");
    assert_eq!(document["retrieved_entry_id"], 0);
    assert_eq!(document["strategy"], "{E,D}+R");
    assert_eq!(document["model"], "similarity-oracle");
    assert!(document["retrieval_score"].as_f64().unwrap() > 0.999);
    assert_eq!(document["stage_count"], 2);

    // Unrelated text scores far below the threshold → ANOMALY (1).
    let (status, verdict, json) =
        analyze(analyzer, "QQZX reactor scram VWPK fuselage breach", Some("D+E+R"));
    assert_eq!(status, LtStatus::LT_STATUS_OK);
    assert_eq!(verdict, 1);
    let document: serde_json::Value = serde_json::from_str(&json.unwrap()).unwrap();
    assert_eq!(document["verdict"], "ANOMALY");
    assert_eq!(document["strategy"], "D+E+R");
    assert_eq!(document["stage_count"], 3);

    unsafe { lt_analyzer_free(analyzer) };
}

#[test]
fn null_and_invalid_arguments_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_json(dir.path());
    let analyzer = unsafe { lt_analyzer_new(config.as_ptr()) };
    assert!(!analyzer.is_null());

    let mut verdict: c_int = -1;
    let status = unsafe {
        lt_analyze(
            analyzer,
            ptr::null(),
            ptr::null(),
            ptr::null(),
            &mut verdict,
            ptr::null_mut(),
        )
    };
    assert_eq!(status, LtStatus::LT_STATUS_NULL_ARGUMENT);
    assert!(take_last_error().contains("entry"));

    let (status, _, _) = analyze(analyzer, "fine text", Some("X+Y+Z"));
    assert_eq!(status, LtStatus::LT_STATUS_INVALID_ARGUMENT);
    assert!(take_last_error().contains("strategy"));

    let (status, _, _) = analyze(analyzer, "   ", None);
    assert_eq!(status, LtStatus::LT_STATUS_INVALID_ARGUMENT);
    assert!(take_last_error().contains("empty"));

    unsafe { lt_analyzer_free(analyzer) };
}

#[test]
fn bad_config_fails_construction_with_a_message() {
    let bad = CString::new("{ not json").unwrap();
    assert!(unsafe { lt_analyzer_new(bad.as_ptr()) }.is_null());
    assert!(take_last_error().contains("parse"));

    // Valid JSON, but the store does not exist.
    let dir = tempfile::tempdir().unwrap();
    let config = serde_json::json!({
        "dataset": {"path": dir.path().join("unused.log")},
        "store_path": dir.path().join("missing.jsonl"),
    });
    let config = CString::new(config.to_string()).unwrap();
    assert!(unsafe { lt_analyzer_new(config.as_ptr()) }.is_null());
    assert!(take_last_error().contains("build-index"));

    assert!(unsafe { lt_analyzer_new(ptr::null()) }.is_null());
    assert!(take_last_error().contains("NULL"));
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        lt_string_free(ptr::null_mut());
        lt_analyzer_free(ptr::null_mut());
    }
}

#[test]
fn success_clears_the_previous_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_json(dir.path());
    let analyzer = unsafe { lt_analyzer_new(config.as_ptr()) };
    assert!(!analyzer.is_null());

    let (status, _, _) = analyze(analyzer, "   ", None);
    assert_eq!(status, LtStatus::LT_STATUS_INVALID_ARGUMENT);

    let (status, _, _) = analyze(analyzer, NORMALS[1], None);
    assert_eq!(status, LtStatus::LT_STATUS_OK);
    assert!(lt_last_error_message().is_null());

    unsafe { lt_analyzer_free(analyzer) };
}
