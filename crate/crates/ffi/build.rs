//! Regenerates the committed C header from the exported items.

use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("set by cargo"));
    let header = crate_dir.join("include").join("logtriage.h");

    let mut config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("LOGTRIAGE_H".to_string()),
        cpp_compat: true,
        documentation: true,
        header: Some(
            "/* C interface to the logtriage log-anomaly analysis pipeline.\n\
             * Generated by cbindgen; do not edit by hand. */"
                .to_string(),
        ),
        ..cbindgen::Config::default()
    };
    // LtVerdict only appears in documentation (the out-parameter is a
    // plain int), so it must be exported explicitly.
    config.export.include = vec!["LtVerdict".to_string()];

    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("cbindgen header generation")
        .write_to_file(header);

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=build.rs");
}
