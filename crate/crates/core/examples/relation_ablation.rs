//! Train on the structural corpus, then remove one dependency relation at
//! a time from the dev trees and report the change in F1.
//!
//! ```text
//! cargo run --release --example relation_ablation
//! ```

use syngcn::config::TrainConfig;
use syngcn::conll::parse_conll;
use syngcn::evaluator::relation_ablation;
use syngcn::fixtures::data_path;
use syngcn::trainer::{train, TrainOptions};

fn load(name: &str) -> syngcn::Result<Vec<syngcn::conll::Sentence>> {
    parse_conll(std::io::BufReader::new(std::fs::File::open(data_path(name))?))
}

fn main() -> syngcn::Result<()> {
    let train_set = load("structural.train.conll")?;
    let dev_set = load("structural.dev.conll")?;
    let cfg = TrainConfig {
        d_h: 16,
        epochs: 30,
        ..TrainConfig::tiny()
    };
    let out = train(&train_set, Some(&dev_set), &cfg, TrainOptions::default())?;
    let ablation = relation_ablation(&out.best, &dev_set, 20, 1)?;
    println!("baseline F1 {:.4}", ablation.baseline.f1);
    let mut rows = ablation.rows.clone();
    rows.sort_by(|a, b| a.delta_f1.total_cmp(&b.delta_f1));
    for r in rows {
        println!("  drop {:<6} ({:>3} arcs)  ΔF1 {:+.4}", r.relation, r.count, r.delta_f1);
    }
    Ok(())
}
