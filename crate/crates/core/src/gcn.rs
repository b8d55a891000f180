//! Gated syntactic graph convolution.
//!
//! One layer computes, for every word `v`,
//!
//! ```text
//! h'_v = ReLU( Σ_{u ∈ N(v)} g_{u,v} · (V_dir(u,v) h_u + b_label(u,v)) )
//! g_{u,v} = σ( h_u · v̂_dir(u,v) + b̂_label(u,v) )
//! ```
//!
//! with one weight matrix per edge direction (along, opposite, self) and
//! label-specific biases. Messages are summed without normalization.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{sigmoid_scalar, ParamStore, Scalar, Tape, Tensor, Var};
use crate::syngraph::{Direction, Edge, LabelSpace, SyntacticGraph};

pub const PROJECTION: &str = "gcn.proj";

pub fn weight_name(layer: usize, dir: Direction) -> String {
    let d = match dir {
        Direction::Along => "along",
        Direction::Opposite => "opposite",
        Direction::SelfLoop => "self",
    };
    format!("gcn.l{layer}.v_{d}")
}

pub fn bias_name(layer: usize) -> String {
    format!("gcn.l{layer}.bias")
}

pub fn unknown_bias_name(layer: usize) -> String {
    format!("gcn.l{layer}.bias_unk")
}

pub fn gate_weight_name(layer: usize) -> String {
    format!("gcn.l{layer}.gate_v")
}

pub fn gate_bias_name(layer: usize) -> String {
    format!("gcn.l{layer}.gate_b")
}

pub fn unknown_gate_bias_name(layer: usize) -> String {
    format!("gcn.l{layer}.gate_b_unk")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GcnSettings {
    /// Hidden width `m`, shared by all layers.
    pub width: usize,
    pub layers: usize,
    pub gates: bool,
    pub labels: LabelSpace,
}

/// Edge dropout applied to every layer during training.
pub struct EdgeDropout<'a, R> {
    pub beta: f64,
    pub keep_self_loops: bool,
    pub rng: &'a mut R,
}

/// Register `K` layers of parameters, plus an input projection when the
/// input width differs from `m`.
pub fn init_params<T: Scalar, R: Rng>(params: &mut ParamStore<T>, settings: GcnSettings, input_width: usize, rng: &mut R) {
    let m = settings.width;
    if settings.layers > 0 && input_width != m {
        let limit = (6.0 / (input_width + m) as f64).sqrt();
        params.insert_uniform(PROJECTION, &[m, input_width], limit, rng);
    }
    let glorot = (6.0 / (2 * m) as f64).sqrt();
    for layer in 0..settings.layers {
        for dir in Direction::ALL {
            params.insert_uniform(&weight_name(layer, dir), &[m, m], glorot, rng);
        }
        params.insert(bias_name(layer), Tensor::zeros(&[settings.labels.size(), m]), true);
        params.insert(unknown_bias_name(layer), Tensor::zeros(&[2, m]), true);
        if settings.gates {
            let limit = (6.0 / (m + 1) as f64).sqrt();
            params.insert_uniform(&gate_weight_name(layer), &[3, m], limit, rng);
            params.insert(gate_bias_name(layer), Tensor::zeros(&[settings.labels.size(), 1]), true);
            params.insert(unknown_gate_bias_name(layer), Tensor::zeros(&[2, 1]), true);
        }
    }
}

/// Scalar gate of one edge given the source state `h_u`.
pub fn gate<T: Scalar>(params: &ParamStore<T>, layer: usize, h_u: &[T], edge: &Edge) -> Result<T> {
    let v = params.value(&gate_weight_name(layer))?;
    let b = label_row(params, layer, edge.label, &gate_bias_name(layer), &unknown_gate_bias_name(layer))?;
    let dot = h_u
        .iter()
        .zip(v.row(edge.direction.index()))
        .fold(T::zero(), |acc, (&x, &w)| acc + x * w);
    Ok(sigmoid_scalar(dot + b[0]))
}

fn label_row<'a, T: Scalar>(
    params: &'a ParamStore<T>,
    _layer: usize,
    label: usize,
    known: &str,
    unknown: &str,
) -> Result<&'a [T]> {
    let table = params.value(known)?;
    if label < table.rows() {
        return Ok(table.row(label));
    }
    let unk = params.value(unknown)?;
    let r = label - table.rows();
    if r >= unk.rows() {
        return Err(Error::Index {
            what: "edge label",
            index: label,
            size: table.rows() + unk.rows(),
        });
    }
    Ok(unk.row(r))
}

/// One gated layer over `h [n × m]`. Gates are replaced by the constant 1
/// when `gates` is false.
pub fn gcn_layer<T: Scalar>(
    tape: &mut Tape<T>,
    params: &ParamStore<T>,
    layer: usize,
    h: Var,
    graph: &SyntacticGraph,
    gates: bool,
) -> Result<Var> {
    let (n, m) = (tape.value(h).rows(), tape.value(h).cols());
    if n != graph.n() {
        return Err(Error::contract(format!(
            "gcn input has {n} rows but the graph has {} nodes",
            graph.n()
        )));
    }
    if let Some(e) = graph.edges().iter().find(|e| e.src >= n || e.dst >= n) {
        return Err(Error::contract(format!("dangling edge {} -> {} in a {n}-node graph", e.src, e.dst)));
    }

    let bias = {
        let known = tape.param(params, &bias_name(layer))?;
        let unk = tape.param(params, &unknown_bias_name(layer))?;
        tape.concat_rows(&[known, unk])?
    };
    let gate_parts = if gates {
        let v = tape.param(params, &gate_weight_name(layer))?;
        let known = tape.param(params, &gate_bias_name(layer))?;
        let unk = tape.param(params, &unknown_gate_bias_name(layer))?;
        Some((v, tape.concat_rows(&[known, unk])?))
    } else {
        None
    };

    let mut aggregated = Vec::with_capacity(3);
    for dir in Direction::ALL {
        let edges: Vec<&Edge> = graph.edges().iter().filter(|e| e.direction == dir).collect();
        if edges.is_empty() {
            continue;
        }
        let src: Vec<usize> = edges.iter().map(|e| e.src).collect();
        let dst: Vec<usize> = edges.iter().map(|e| e.dst).collect();
        let lab: Vec<usize> = edges.iter().map(|e| e.label).collect();

        let weight = tape.param(params, &weight_name(layer, dir))?;
        let transformed = tape.matmul_nt(h, weight)?;
        let from = tape.gather_rows(transformed, &src)?;
        let b = tape.gather_rows(bias, &lab)?;
        let mut messages = tape.add(from, b)?;

        if let Some((gate_v, gate_b)) = gate_parts {
            let h_src = tape.gather_rows(h, &src)?;
            let v_dir = tape.row(gate_v, dir.index())?;
            let logits = tape.matmul_nt(h_src, v_dir)?;
            let gb = tape.gather_rows(gate_b, &lab)?;
            let pre = tape.add(logits, gb)?;
            let g = tape.sigmoid(pre);
            messages = tape.mul_column(messages, g)?;
        }
        aggregated.push(tape.scatter_add_rows(messages, &dst, n)?);
    }

    let total = if aggregated.is_empty() {
        tape.constant(Tensor::zeros(&[n, m]))
    } else {
        tape.add_all(&aggregated)?
    };
    Ok(tape.relu(total))
}

/// Project the input if needed, then apply `K` layers, resampling edge
/// dropout for each layer when `dropout` is given.
pub fn gcn_stack_forward<T: Scalar, R: Rng>(
    tape: &mut Tape<T>,
    params: &ParamStore<T>,
    settings: GcnSettings,
    h0: Var,
    graph: &SyntacticGraph,
    mut dropout: Option<EdgeDropout<'_, R>>,
) -> Result<Var> {
    let mut h = h0;
    if settings.layers == 0 {
        return Ok(h);
    }
    if params.contains(PROJECTION) {
        let proj = tape.param(params, PROJECTION)?;
        h = tape.matmul_nt(h, proj)?;
    } else if tape.value(h).cols() != settings.width {
        return Err(Error::Shape {
            op: "gcn_stack_forward",
            left: vec![settings.width],
            right: tape.value(h).shape().to_vec(),
        });
    }
    for layer in 0..settings.layers {
        h = match dropout.as_mut() {
            Some(d) if d.beta > 0.0 => {
                let dropped = graph.edge_dropout(d.beta, d.keep_self_loops, d.rng)?;
                gcn_layer(tape, params, layer, h, &dropped, settings.gates)?
            }
            _ => gcn_layer(tape, params, layer, h, graph, settings.gates)?,
        };
    }
    Ok(h)
}

/// Ungated, unlabeled layer with a single weight matrix and bias:
/// `h'_v = ReLU(Σ_{u ∈ N(v)} (W h_u + b))`.
pub fn plain_gcn_layer<T: Scalar>(h: &Tensor<T>, graph: &SyntacticGraph, w: &Tensor<T>, b: &[T]) -> Result<Tensor<T>> {
    let (n, m) = (h.rows(), h.cols());
    let transformed = h.matmul(&w.transpose())?;
    let mut out = Tensor::zeros(&[n, m]);
    for e in graph.edges() {
        let src = transformed.row(e.src).to_vec();
        for ((o, &x), &bias) in out.row_mut(e.dst).iter_mut().zip(&src).zip(b) {
            *o = *o + x + bias;
        }
    }
    Ok(out.map(|x| if x > T::zero() { x } else { T::zero() }))
}

/// Number of trainable tensors per layer: three direction matrices and one
/// bias table always, plus the gate vector table and gate bias table when
/// gates are on. Independent of the number of relations.
pub fn tensors_per_layer(gates: bool) -> usize {
    if gates {
        6
    } else {
        4
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn settings(m: usize, r: usize, layers: usize) -> GcnSettings {
        GcnSettings {
            width: m,
            layers,
            gates: true,
            labels: LabelSpace::new(r),
        }
    }

    #[test]
    fn zero_gate_params_give_one_half() {
        let mut p = ParamStore::<f32>::new();
        init_params(&mut p, settings(3, 1, 1), 3, &mut ChaCha8Rng::seed_from_u64(0));
        p.insert(gate_weight_name(0), Tensor::zeros(&[3, 3]), true);
        let g = SyntacticGraph::from_heads(&[None], &[None], LabelSpace::new(1)).unwrap();
        assert_eq!(gate(&p, 0, &[0.0; 3], &g.edges()[0]).unwrap(), 0.5);
    }

    #[test]
    fn saturated_gate_bias_opens_the_edge() {
        let mut p = ParamStore::<f32>::new();
        init_params(&mut p, settings(2, 1, 1), 2, &mut ChaCha8Rng::seed_from_u64(0));
        p.insert(gate_bias_name(0), Tensor::full(&[3, 1], 50.0), true);
        let g = SyntacticGraph::from_heads(&[None], &[None], LabelSpace::new(1)).unwrap();
        let v = gate(&p, 0, &[0.1, -0.2], &g.edges()[0]).unwrap();
        assert!(v > 0.999_999 && v < 1.0);
    }

    #[test]
    fn single_node_bias_times_half() {
        let mut p = ParamStore::<f32>::new();
        let s = settings(4, 1, 1);
        init_params(&mut p, s, 4, &mut ChaCha8Rng::seed_from_u64(0));
        p.insert(weight_name(0, Direction::SelfLoop), Tensor::zeros(&[4, 4]), true);
        p.insert(gate_weight_name(0), Tensor::zeros(&[3, 4]), true);
        let mut bias = Tensor::zeros(&[3, 4]);
        bias.row_mut(s.labels.self_loop()).fill(1.0);
        p.insert(bias_name(0), bias, true);
        let g = SyntacticGraph::from_heads(&[None], &[None], s.labels).unwrap();
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::from_f64(&[1, 4], &[0.3, -1.0, 2.0, 0.7]).unwrap());
        let out = gcn_layer(&mut tape, &p, 0, h, &g, true).unwrap();
        assert_eq!(tape.value(out).data(), &[0.5; 4]);
    }

    #[test]
    fn k_zero_is_identity() {
        let p = ParamStore::<f32>::new();
        let g = SyntacticGraph::from_heads(&[None, Some(0)], &[None, Some(0)], LabelSpace::new(1)).unwrap();
        let mut tape = Tape::new();
        let x = Tensor::from_f64(&[2, 3], &[1., 2., 3., 4., 5., 6.]).unwrap();
        let h = tape.constant(x.clone());
        let out = gcn_stack_forward::<f32, ChaCha8Rng>(&mut tape, &p, settings(3, 1, 0), h, &g, None).unwrap();
        assert_eq!(tape.value(out), &x);
    }

    #[test]
    fn full_dropout_yields_zeros() {
        let mut p = ParamStore::<f32>::new();
        let s = settings(3, 1, 1);
        init_params(&mut p, s, 3, &mut ChaCha8Rng::seed_from_u64(0));
        p.insert(bias_name(0), Tensor::ones(&[3, 3]), true);
        let g = SyntacticGraph::from_heads(&[None, Some(0)], &[None, Some(0)], s.labels).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::ones(&[2, 3]));
        let dropout = EdgeDropout {
            beta: 1.0,
            keep_self_loops: false,
            rng: &mut rng,
        };
        let out = gcn_stack_forward(&mut tape, &p, s, h, &g, Some(dropout)).unwrap();
        assert!(tape.value(out).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn row_count_mismatch_is_a_contract_error() {
        let mut p = ParamStore::<f32>::new();
        let s = settings(2, 1, 1);
        init_params(&mut p, s, 2, &mut ChaCha8Rng::seed_from_u64(0));
        let g = SyntacticGraph::from_heads(&[None], &[None], s.labels).unwrap();
        let mut tape = Tape::new();
        let h = tape.constant(Tensor::zeros(&[2, 2]));
        assert!(matches!(gcn_layer(&mut tape, &p, 0, h, &g, true), Err(Error::Contract(_))));
    }

    #[test]
    fn parameter_count_is_independent_of_relations() {
        for r in [1, 41, 48] {
            let mut p = ParamStore::<f32>::new();
            init_params(&mut p, settings(4, r, 1), 4, &mut ChaCha8Rng::seed_from_u64(0));
            let matrices = Direction::ALL
                .iter()
                .filter(|&&d| p.contains(&weight_name(0, d)))
                .count();
            assert_eq!(matrices, 3);
            assert_eq!(p.value(&bias_name(0)).unwrap().shape(), &[2 * r + 1, 4]);
            assert_eq!(p.value(&gate_bias_name(0)).unwrap().shape(), &[2 * r + 1, 1]);
            assert_eq!(p.value(&gate_weight_name(0)).unwrap().shape(), &[3, 4]);
        }
    }
}
