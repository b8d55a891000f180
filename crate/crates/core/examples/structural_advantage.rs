//! Train the BiLSTM alone and the BiLSTM with one GCN layer on a corpus
//! whose roles are decided by a word that is far from the predicate in
//! the sentence but directly attached to it in the tree, and report how
//! many epochs each needs to reach dev F1 0.95.
//!
//! ```text
//! cargo run --release --example structural_advantage
//! ```

use syngcn::config::{EncoderMode, TrainConfig};
use syngcn::conll::parse_conll;
use syngcn::fixtures::data_path;
use syngcn::trainer::{train, TrainOptions};

const TARGET_F1: f64 = 0.95;

fn load(name: &str) -> syngcn::Result<Vec<syngcn::conll::Sentence>> {
    parse_conll(std::io::BufReader::new(std::fs::File::open(data_path(name))?))
}

fn main() -> syngcn::Result<()> {
    let train_set = load("structural.train.conll")?;
    let dev_set = load("structural.dev.conll")?;
    let base = TrainConfig {
        d_h: 16,
        lstm_layers: 1,
        gcn_layers: 1,
        epochs: 40,
        ..TrainConfig::tiny()
    };
    for mode in [EncoderMode::LstmOnly, EncoderMode::LstmGcn] {
        let cfg = TrainConfig { mode, ..base.clone() };
        let out = train(
            &train_set,
            Some(&dev_set),
            &cfg,
            TrainOptions {
                stop_at_f1: Some(TARGET_F1),
                ..Default::default()
            },
        )?;
        let best = out.history.iter().filter_map(|r| r.dev).map(|s| s.f1).fold(0.0, f64::max);
        match out.reached {
            Some(e) => println!("{mode:<9} reached F1 {TARGET_F1} after {e} epochs"),
            None => println!("{mode:<9} did not reach F1 {TARGET_F1} in {} epochs (best {best:.3})", cfg.epochs),
        }
    }
    Ok(())
}
