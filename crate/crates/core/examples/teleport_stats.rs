//! Fraction of arguments more than five tokens from their predicate, and
//! more than five steps away when a single dependency arc may be crossed
//! in one step.
//!
//! ```text
//! cargo run --release --example teleport_stats [file.conll ...]
//! ```

use std::path::PathBuf;

use syngcn::conll::parse_conll;
use syngcn::evaluator::teleport_stats;
use syngcn::fixtures::{data_path, FIXTURE_FILES};

fn main() -> syngcn::Result<()> {
    let mut paths: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    if paths.is_empty() {
        paths = FIXTURE_FILES.iter().map(|f| data_path(f)).collect();
    }
    println!("{:<40} {:>9} {:>8} {:>9}", "corpus", "arguments", "tokens>5", "teleport>5");
    for p in paths {
        let sentences = parse_conll(std::io::BufReader::new(std::fs::File::open(&p)?))?;
        let t = teleport_stats(&sentences);
        let name = p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        println!(
            "{name:<40} {:>9} {:>7.1}% {:>9.1}%",
            t.arguments,
            100.0 * t.token_fraction(),
            100.0 * t.teleport_fraction()
        );
    }
    Ok(())
}
