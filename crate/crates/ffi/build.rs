//! Generates `include/otr.h` from the exported C ABI.

fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    let header = std::path::Path::new(&crate_dir).join("include").join("otr.h");
    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("OTR_H".into()),
        cpp_compat: true,
        enumeration: cbindgen::EnumConfig {
            // C enums share one namespace; OtrStatus_Ok instead of Ok.
            prefix_with_name: true,
            ..Default::default()
        },
        ..Default::default()
    };
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("C header generation")
        .write_to_file(header);
    println!("cargo:rerun-if-changed=src/lib.rs");
}
