//! Regenerates the JSON files under `fixtures/` from the in-code fixtures.
//!
//! cargo run -p gavg-core --example write_fixtures -- fixtures

use std::path::PathBuf;

use gavg_core::fixtures;

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir).expect("create fixture directory");
    for (name, doc) in fixtures::shipped() {
        let path = dir.join(name);
        let mut text = serde_json::to_string_pretty(&doc).expect("serialize");
        text.push('\n');
        std::fs::write(&path, text).expect("write fixture");
        println!("wrote {}", path.display());
    }
}
