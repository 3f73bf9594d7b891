use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("set by cargo"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml")).expect("cbindgen.toml");
    // every exported type lives in lib.rs, so no dependency metadata is needed
    let generated = cbindgen::Builder::new()
        .with_config(config)
        .with_src(crate_dir.join("src/lib.rs"))
        .generate();
    match generated {
        Ok(b) => {
            b.write_to_file(crate_dir.join("include/vadm.h"));
        }
        Err(e) => println!("cargo:warning=header not regenerated: {e}"),
    }
}
