//! One gated syntactic GCN layer on a hand-built dependency tree: prints
//! the labeled edges, each edge gate and the layer output, then shows the
//! layer collapsing to a plain GCN when gates are forced open and all
//! direction weights and label biases are tied.
//!
//! ```text
//! cargo run --example gcn_layer
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use syngcn::gcn::{self, GcnSettings};
use syngcn::numerics::{ParamStore, Tape, Tensor};
use syngcn::syngraph::{Direction, LabelSpace, SyntacticGraph};

fn main() -> syngcn::Result<()> {
    // Sequa makes and repairs jet engines
    let words = ["Sequa", "makes", "and", "repairs", "jet", "engines"];
    let relations = ["SBJ", "COORD", "CONJ", "NMOD", "OBJ"];
    let heads = [Some(1), None, Some(1), Some(2), Some(5), Some(1)];
    let rels = [Some(0), None, Some(1), Some(2), Some(3), Some(4)];
    let labels = LabelSpace::new(relations.len());
    let graph = SyntacticGraph::from_heads(&heads, &rels, labels)?;

    let m = 4;
    let settings = GcnSettings {
        width: m,
        layers: 1,
        gates: true,
        labels,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut params = ParamStore::<f64>::new();
    gcn::init_params(&mut params, settings, m, &mut rng);
    let h = Tensor::from_rows(
        &(0..words.len())
            .map(|i| (0..m).map(|k| ((i * m + k) as f64 * 0.37).sin()).collect())
            .collect::<Vec<Vec<f64>>>(),
    )?;

    println!("{} edges for {} words (3n - 2 = {})", graph.edges().len(), words.len(), 3 * words.len() - 2);
    for e in graph.edges() {
        let label = match e.direction {
            Direction::SelfLoop => "self".to_string(),
            Direction::Along => relations[e.relation.unwrap()].to_string(),
            Direction::Opposite => format!("{}'", relations[e.relation.unwrap()]),
        };
        let g = gcn::gate(&params, 0, h.row(e.src), e)?;
        println!("  {:>8} -> {:<8} {:<6} gate {g:.4}", words[e.src], words[e.dst], label);
    }

    let mut tape = Tape::new();
    let x = tape.constant(h.clone());
    let y = gcn::gcn_layer(&mut tape, &params, 0, x, &graph, true)?;
    println!("layer output:");
    for (i, w) in words.iter().enumerate() {
        println!("  {w:>8} {:?}", tape.value(y).row(i).iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    }

    let w = params.value(&gcn::weight_name(0, Direction::Along))?.clone();
    let b: Vec<f64> = (0..m).map(|k| 0.1 * k as f64).collect();
    for dir in Direction::ALL {
        params.insert(gcn::weight_name(0, dir), w.clone(), true);
    }
    let rows = vec![b.clone(); labels.size()];
    params.insert(gcn::bias_name(0), Tensor::from_rows(&rows)?, true);
    params.insert(gcn::unknown_bias_name(0), Tensor::from_rows(&[b.clone(), b.clone()])?, true);
    let mut tape = Tape::new();
    let x = tape.constant(h.clone());
    let tied = gcn::gcn_layer(&mut tape, &params, 0, x, &graph, false)?;
    let plain = gcn::plain_gcn_layer(&h, &graph, &w, &b)?;
    println!("tied, ungated layer vs plain GCN: max |diff| = {:.2e}", tape.value(tied).max_abs_diff(&plain));
    Ok(())
}
