//! Train three models with different seeds and combine them as a product
//! of experts.
//!
//! ```text
//! cargo run --release --example ensemble
//! ```

use syngcn::config::TrainConfig;
use syngcn::conll::parse_conll;
use syngcn::evaluator::{combine_predictions, ensemble, score};
use syngcn::fixtures::data_path;
use syngcn::trainer::{train, TrainOptions};

fn load(name: &str) -> syngcn::Result<Vec<syngcn::conll::Sentence>> {
    parse_conll(std::io::BufReader::new(std::fs::File::open(data_path(name))?))
}

fn main() -> syngcn::Result<()> {
    let train_set = load("structural.train.conll")?;
    let dev_set = load("structural.dev.conll")?;
    let mut models = Vec::new();
    for seed in 1..=3 {
        let cfg = TrainConfig {
            d_h: 16,
            epochs: 12,
            seed,
            ..TrainConfig::tiny()
        };
        let out = train(&train_set, Some(&dev_set), &cfg, TrainOptions::default())?;
        let f1 = score(&dev_set, &out.best.predict(&dev_set, 1)?)?.f1;
        println!("seed {seed}: dev F1 {f1:.4}");
        models.push(out.best);
    }
    let combined = ensemble(&models, &dev_set, 1)?;
    println!("ensemble of 3: dev F1 {:.4}", score(&dev_set, &combined)?.f1);

    let single = models[0].predict(&dev_set, 1)?;
    let same = combine_predictions(&[single.clone(), single.clone(), single.clone()])?;
    let max_diff = single
        .frames()
        .zip(same.frames())
        .flat_map(|((_, a), (_, b))| a.distributions.iter().flatten().zip(b.distributions.iter().flatten()))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    println!("three copies of one model vs the model: max |Δp| = {max_diff:.2e}");
    Ok(())
}
