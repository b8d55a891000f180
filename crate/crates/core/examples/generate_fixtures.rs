//! Regenerate the bundled synthetic corpora under `crates/core/data/`.
//!
//! ```text
//! cargo run --example generate_fixtures [out_dir]
//! ```

use std::path::PathBuf;

use syngcn::conll::to_conll_string;
use syngcn::fixtures::{self, FIXTURE_FILES};

fn main() -> syngcn::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    std::fs::create_dir_all(&dir)?;
    for name in FIXTURE_FILES {
        let text = to_conll_string(&fixtures::bundled(name).expect("listed fixture"));
        std::fs::write(dir.join(name), text)?;
        println!("wrote {}", dir.join(name).display());
    }
    Ok(())
}
