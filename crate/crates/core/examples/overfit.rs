//! Fit the bundled 20-sentence corpus and print per-epoch F1 until the
//! model reproduces every gold role.
//!
//! ```text
//! cargo run --release --example overfit
//! ```

use std::time::Instant;

use syngcn::config::TrainConfig;
use syngcn::conll::parse_conll;
use syngcn::fixtures::data_path;
use syngcn::trainer::{train, TrainOptions};

fn main() -> syngcn::Result<()> {
    let corpus = parse_conll(std::io::BufReader::new(std::fs::File::open(data_path("overfit.conll"))?))?;
    let cfg = TrainConfig {
        d_h: 32,
        lstm_layers: 1,
        gcn_layers: 1,
        epochs: 200,
        ..TrainConfig::tiny()
    };
    let start = Instant::now();
    let out = train(
        &corpus,
        Some(&corpus),
        &cfg,
        TrainOptions {
            stop_at_f1: Some(0.99),
            ..Default::default()
        },
    )?;
    for r in &out.history {
        let f1 = r.dev.map_or(0.0, |s| s.f1);
        println!("epoch {:>3}  loss {:>8.4}  F1 {f1:.4}", r.epoch, r.train_loss);
    }
    match out.reached {
        Some(e) => println!("F1 >= 0.99 after {e} epochs in {:.1?}", start.elapsed()),
        None => println!("F1 0.99 not reached in {} epochs", cfg.epochs),
    }
    Ok(())
}
