use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use syngcn::conll::{parse_conll_str, repair_heads, to_conll_string};
use syngcn::evaluator::teleport_distance;
use syngcn::fixtures::structural_corpus;
use syngcn::gcn::{self, GcnSettings};
use syngcn::numerics::{argmax, softmax, ParamStore};
use syngcn::syngraph::{Direction, LabelSpace, SyntacticGraph};

/// Random tree as 0-based heads plus relation ids (some unknown).
fn tree() -> impl Strategy<Value = (Vec<Option<usize>>, Vec<Option<usize>>)> {
    (1usize..14).prop_flat_map(|n| {
        (
            Just(n),
            0..n,
            proptest::collection::vec(any::<prop::sample::Index>(), n),
            proptest::collection::vec(proptest::option::weighted(0.9, 0usize..5), n),
        )
            .prop_map(|(n, root, picks, rels)| {
                // token i (in rotated order after the root) attaches to an earlier one
                let order: Vec<usize> = (0..n).map(|k| (root + k) % n).collect();
                let mut heads = vec![None; n];
                for k in 1..n {
                    heads[order[k]] = Some(order[picks[k].index(k)]);
                }
                (heads, rels)
            })
    })
}

fn graph_of(heads: &[Option<usize>], rels: &[Option<usize>]) -> SyntacticGraph {
    SyntacticGraph::from_heads(heads, rels, LabelSpace::new(5)).unwrap()
}

fn is_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    if heads.iter().filter(|&&h| h == 0).count() != 1 {
        return false;
    }
    (0..n).all(|start| {
        let mut cur = start;
        for _ in 0..=n {
            if heads[cur] == 0 {
                return true;
            }
            cur = heads[cur] - 1;
        }
        false
    })
}

proptest! {
    #[test]
    fn every_tree_has_3n_minus_2_edges_in_matched_pairs((heads, rels) in tree()) {
        let g = graph_of(&heads, &rels);
        let n = heads.len();
        prop_assert_eq!(g.edges().len(), 3 * n - 2);
        for e in g.edges().iter().filter(|e| e.direction == Direction::Along) {
            let twins = g.edges().iter()
                .filter(|o| o.direction == Direction::Opposite && o.src == e.dst && o.dst == e.src)
                .count();
            prop_assert_eq!(twins, 1);
        }
        for v in 0..n {
            prop_assert_eq!(g.in_edges(v).filter(|e| e.direction == Direction::SelfLoop).count(), 1);
        }
    }

    #[test]
    fn gates_stay_in_the_unit_interval(
        (heads, rels) in tree(),
        seed in any::<u64>(),
        scale in 0.1f64..50.0,
    ) {
        let g = graph_of(&heads, &rels);
        let m = 4;
        let settings = GcnSettings { width: m, layers: 1, gates: true, labels: g.labels() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::<f64>::new();
        gcn::init_params(&mut params, settings, m, &mut rng);
        let h: Vec<f64> = (0..m).map(|k| scale * ((seed as f64 + k as f64).sin())).collect();
        for e in g.edges() {
            let v = gcn::gate(&params, 0, &h, e).unwrap();
            prop_assert!((0.0..=1.0).contains(&v), "gate {}", v);
        }
    }

    #[test]
    fn edge_dropout_only_removes((heads, rels) in tree(), beta in 0.0f64..=1.0, seed in any::<u64>()) {
        let g = graph_of(&heads, &rels);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kept = g.edge_dropout(beta, true, &mut rng).unwrap();
        let mut it = g.edges().iter();
        for e in kept.edges() {
            prop_assert!(it.any(|o| o == e), "edge not in the original, or out of order");
        }
        prop_assert_eq!(
            kept.edges().iter().filter(|e| e.direction == Direction::SelfLoop).count(),
            heads.len()
        );
    }

    #[test]
    fn teleporting_never_lengthens_a_path((heads, _) in tree(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let n = heads.len();
        let (p, q) = (a.index(n), b.index(n));
        let d = teleport_distance(&heads, p, q);
        prop_assert!(d <= p.abs_diff(q));
        prop_assert_eq!(d, teleport_distance(&heads, q, p));
        if heads[q] == Some(p) || heads[p] == Some(q) {
            prop_assert!(d <= 1);
        }
    }

    #[test]
    fn repaired_heads_form_a_tree(raw in proptest::collection::vec(0usize..20, 1..15)) {
        let mut heads = raw.clone();
        let changed = repair_heads(&mut heads);
        prop_assert!(is_tree(&heads), "{:?} -> {:?}", raw, heads);
        if !changed {
            prop_assert_eq!(&heads, &raw);
        }
        let mut again = heads.clone();
        prop_assert!(!repair_heads(&mut again));
    }

    #[test]
    fn softmax_is_a_distribution_and_argmax_takes_the_first_max(row in proptest::collection::vec(-30.0f64..30.0, 1..12)) {
        let p = softmax(&row);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let best = argmax(&row);
        prop_assert!(row.iter().all(|&x| x <= row[best]));
        prop_assert!(row[..best].iter().all(|&x| x < row[best]));
    }

    #[test]
    fn generated_corpora_round_trip(seed in any::<u64>()) {
        let text = to_conll_string(&structural_corpus(seed, 3));
        prop_assert_eq!(to_conll_string(&parse_conll_str(&text).unwrap()), text);
    }
}
