//! Parse a CoNLL-2009 file, write it back and compare bytes; also prints
//! corpus and graph statistics.
//!
//! ```text
//! cargo run --example conll_roundtrip [file.conll]
//! ```

use syngcn::conll::{parse_conll_str, to_conll_string};
use syngcn::fixtures::data_path;
use syngcn::lexicon::Lexicon;
use syngcn::syngraph::build_graph;

fn main() -> syngcn::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| data_path("relations48.conll"));
    let text = std::fs::read_to_string(&path)?;
    let sentences = parse_conll_str(&text)?;
    let written = to_conll_string(&sentences);
    let lexicon = Lexicon::build(&sentences, 1);
    let tokens: usize = sentences.iter().map(|s| s.len()).sum();
    let predicates: usize = sentences.iter().map(|s| s.predicates.len()).sum();
    let repaired = sentences.iter().filter(|s| s.repaired).count();
    let edges: usize = sentences.iter().map(|s| build_graph(s, &lexicon).edges().len()).sum();

    println!("file: {}", path.display());
    println!("sentences {}, tokens {tokens}, predicates {predicates}, repaired trees {repaired}", sentences.len());
    println!("relations {}, label space 2R+1 = {}", lexicon.num_relations(), 2 * lexicon.num_relations() + 1);
    println!("graph edges {edges} (3n - 2 per sentence: {})", 3 * tokens - 2 * sentences.len());
    println!("round trip byte-identical: {}", written == text);
    Ok(())
}
