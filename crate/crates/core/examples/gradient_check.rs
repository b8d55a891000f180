//! Finite-difference check of every gradient in the full model (BiLSTM,
//! gated GCN and role classifier) on a three-token sentence.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use syngcn::config::TrainConfig;
use syngcn::fixtures::gradcheck_sentence;
use syngcn::trainer::full_model_grad_check;

fn main() -> syngcn::Result<()> {
    let cfg = TrainConfig::gradcheck();
    let report = full_model_grad_check(&[gradcheck_sentence()], &cfg)?;
    println!("entries checked: {}", report.checked);
    println!("skipped near ReLU kinks: {}", report.skipped);
    if let Some((name, i)) = &report.worst {
        println!("worst entry: {name}[{i}]");
    }
    println!("max relative error: {:.3e}", report.max_rel_error);
    println!("{}", if report.passes(1e-4) { "PASS" } else { "FAIL" });
    Ok(())
}
