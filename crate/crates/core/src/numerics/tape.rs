//! Tape-based reverse-mode automatic differentiation over [`Tensor`]s.
//!
//! Every operation appends a node holding its output value and enough
//! information to compute the vector-Jacobian product later. Because nodes
//! are only ever appended, the node list is already in topological order
//! and [`Tape::backward`] walks it once in reverse.
//!
//! ```
//! use syngcn::numerics::{Tape, Tensor};
//!
//! let mut tape = Tape::<f64>::new();
//! let w = tape.leaf(Tensor::from_f64(&[1, 2], &[3.0, -1.0]).unwrap(), true);
//! let sq = tape.mul(w, w).unwrap();
//! let loss = tape.sum(sq);
//! let grads = tape.backward(loss).unwrap();
//! assert_eq!(grads.wrt(w).unwrap().data(), &[6.0, -2.0]);
//! ```

use std::sync::Arc;

use indexmap::IndexMap;

use super::params::ParamStore;
use super::tensor::{gemm_nn, gemm_nt, gemm_tn, Scalar, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    MatMul(usize, usize),
    MatMulNt(usize, usize),
    /// Second operand is either the same shape or a single row broadcast
    /// over all rows of the first.
    Add(usize, usize),
    Mul(usize, usize),
    /// `a[n×d] ⊙ g[n×1]`, scaling each row of `a` by one scalar.
    MulColumn(usize, usize),
    Scale(usize, T),
    Sigmoid(usize),
    Tanh(usize),
    Relu(usize),
    Row(usize, usize),
    ConcatRows(Vec<usize>),
    ConcatCols(Vec<usize>),
    GatherRows(usize, Vec<usize>),
    ScatterAddRows(usize, Vec<usize>),
    Sum(usize),
    SoftmaxCrossEntropy {
        logits: usize,
        gold: Vec<usize>,
        probs: Vec<T>,
    },
}

struct Node<T> {
    value: Arc<Tensor<T>>,
    op: Op<T>,
    requires_grad: bool,
}

pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    params: Vec<(String, usize)>,
    first_non_finite: Option<usize>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            params: Vec::new(),
            first_non_finite: None,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    /// Index of the first node whose output contained NaN or ±Inf.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.first_non_finite
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.push_arc(Arc::new(value), op, requires_grad)
    }

    fn push_arc(&mut self, value: Arc<Tensor<T>>, op: Op<T>, requires_grad: bool) -> Var {
        if self.first_non_finite.is_none() && !value.is_finite() {
            self.first_non_finite = Some(self.nodes.len());
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, idx: &[usize]) -> bool {
        idx.iter().any(|&i| self.nodes[i].requires_grad)
    }

    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    /// Bind a stored parameter as a leaf. Frozen parameters become
    /// constants and never receive a gradient.
    pub fn param(&mut self, store: &ParamStore<T>, name: &str) -> Result<Var> {
        let p = store
            .get(name)
            .ok_or_else(|| Error::contract(format!("unknown parameter `{name}`")))?;
        let var = self.push_arc(Arc::clone(&p.value), Op::Leaf, p.trainable);
        if p.trainable {
            self.params.push((name.to_string(), var.0));
        }
        Ok(var)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let (m, k, k2, n) = (av.rows(), av.cols(), bv.rows(), bv.cols());
        if k != k2 {
            return Err(Error::Shape {
                op: "matmul",
                left: av.shape().to_vec(),
                right: bv.shape().to_vec(),
            });
        }
        let mut out = Tensor::zeros(&[m, n]);
        gemm_nn(av.data(), bv.data(), out.data_mut(), m, k, n);
        let rg = self.rg(&[a.0, b.0]);
        Ok(self.push(out, Op::MatMul(a.0, b.0), rg))
    }

    /// `a · bᵀ` for `a[m×k]`, `b[n×k]`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let (m, k, n, k2) = (av.rows(), av.cols(), bv.rows(), bv.cols());
        if k != k2 {
            return Err(Error::Shape {
                op: "matmul_nt",
                left: av.shape().to_vec(),
                right: bv.shape().to_vec(),
            });
        }
        let mut out = Tensor::zeros(&[m, n]);
        gemm_nt(av.data(), bv.data(), out.data_mut(), m, k, n);
        let rg = self.rg(&[a.0, b.0]);
        Ok(self.push(out, Op::MatMulNt(a.0, b.0), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let same = av.rows() == bv.rows() && av.cols() == bv.cols();
        let broadcast = bv.rows() == 1 && av.cols() == bv.cols();
        if !same && !broadcast {
            return Err(Error::Shape {
                op: "add",
                left: av.shape().to_vec(),
                right: bv.shape().to_vec(),
            });
        }
        let cols = av.cols();
        let mut out = Tensor::zeros(&[av.rows(), cols]);
        for (i, o) in out.data_mut().iter_mut().enumerate() {
            let bj = if same { i } else { i % cols };
            *o = av.data()[i] + bv.data()[bj];
        }
        let rg = self.rg(&[a.0, b.0]);
        Ok(self.push(out, Op::Add(a.0, b.0), rg))
    }

    /// Sum of several same-shaped operands.
    pub fn add_all(&mut self, vars: &[Var]) -> Result<Var> {
        let (&first, rest) = vars
            .split_first()
            .ok_or_else(|| Error::contract("add_all of nothing"))?;
        rest.iter().try_fold(first, |acc, &v| self.add(acc, v))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.rows() != bv.rows() || av.cols() != bv.cols() {
            return Err(Error::Shape {
                op: "mul",
                left: av.shape().to_vec(),
                right: bv.shape().to_vec(),
            });
        }
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| x * y).collect();
        let out = Tensor::new(vec![av.rows(), av.cols()], data)?;
        let rg = self.rg(&[a.0, b.0]);
        Ok(self.push(out, Op::Mul(a.0, b.0), rg))
    }

    /// Scale row `i` of `a` by `g[i, 0]`.
    pub fn mul_column(&mut self, a: Var, g: Var) -> Result<Var> {
        let (av, gv) = (self.value(a), self.value(g));
        if gv.cols() != 1 || gv.rows() != av.rows() {
            return Err(Error::Shape {
                op: "mul_column",
                left: av.shape().to_vec(),
                right: gv.shape().to_vec(),
            });
        }
        let cols = av.cols();
        let data = av
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| x * gv.data()[i / cols])
            .collect();
        let out = Tensor::new(vec![av.rows(), cols], data)?;
        let rg = self.rg(&[a.0, g.0]);
        Ok(self.push(out, Op::MulColumn(a.0, g.0), rg))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        let out = self.value(a).scale(s);
        let rg = self.rg(&[a.0]);
        self.push(out, Op::Scale(a.0, s), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid_scalar);
        let rg = self.rg(&[a.0]);
        self.push(out, Op::Sigmoid(a.0), rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(T::tanh);
        let rg = self.rg(&[a.0]);
        self.push(out, Op::Tanh(a.0), rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| if x > T::zero() { x } else { T::zero() });
        let rg = self.rg(&[a.0]);
        self.push(out, Op::Relu(a.0), rg)
    }

    /// Row `r` of a matrix as a `1 × cols` tensor.
    pub fn row(&mut self, a: Var, r: usize) -> Result<Var> {
        let av = self.value(a);
        if r >= av.rows() {
            return Err(Error::Index {
                what: "row",
                index: r,
                size: av.rows(),
            });
        }
        let out = Tensor::row_vector(av.row(r).to_vec());
        let rg = self.rg(&[a.0]);
        Ok(self.push(out, Op::Row(a.0, r), rg))
    }

    /// Stack matrices with equal column counts vertically.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = parts
            .first()
            .map(|&p| self.value(p).cols())
            .ok_or_else(|| Error::contract("concat_rows of nothing"))?;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let pv = self.value(p);
            if pv.cols() != cols {
                return Err(Error::Shape {
                    op: "concat_rows",
                    left: vec![cols],
                    right: pv.shape().to_vec(),
                });
            }
            rows += pv.rows();
            data.extend_from_slice(pv.data());
        }
        let out = Tensor::new(vec![rows, cols], data)?;
        let idx: Vec<usize> = parts.iter().map(|p| p.0).collect();
        let rg = self.rg(&idx);
        Ok(self.push(out, Op::ConcatRows(idx), rg))
    }

    /// Join matrices with equal row counts side by side.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts
            .first()
            .map(|&p| self.value(p).rows())
            .ok_or_else(|| Error::contract("concat_cols of nothing"))?;
        let mut total = 0;
        for &p in parts {
            let pv = self.value(p);
            if pv.rows() != rows {
                return Err(Error::Shape {
                    op: "concat_cols",
                    left: vec![rows],
                    right: pv.shape().to_vec(),
                });
            }
            total += pv.cols();
        }
        let mut out = Tensor::zeros(&[rows, total]);
        let mut offset = 0;
        for &p in parts {
            let pv = &self.nodes[p.0].value;
            let c = pv.cols();
            for r in 0..rows {
                out.row_mut(r)[offset..offset + c].copy_from_slice(pv.row(r));
            }
            offset += c;
        }
        let idx: Vec<usize> = parts.iter().map(|p| p.0).collect();
        let rg = self.rg(&idx);
        Ok(self.push(out, Op::ConcatCols(idx), rg))
    }

    /// Select rows of `table` by index (embedding lookup).
    pub fn gather_rows(&mut self, table: Var, indices: &[usize]) -> Result<Var> {
        let tv = self.value(table);
        let cols = tv.cols();
        let mut data = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            if i >= tv.rows() {
                return Err(Error::Index {
                    what: "gather_rows",
                    index: i,
                    size: tv.rows(),
                });
            }
            data.extend_from_slice(tv.row(i));
        }
        let out = Tensor::new(vec![indices.len(), cols], data)?;
        let rg = self.rg(&[table.0]);
        Ok(self.push(out, Op::GatherRows(table.0, indices.to_vec()), rg))
    }

    /// Sum row `i` of `src` into row `targets[i]` of an `out_rows`-row
    /// zero matrix. Rows are visited in order, so the reduction order is
    /// fixed by the index list.
    pub fn scatter_add_rows(&mut self, src: Var, targets: &[usize], out_rows: usize) -> Result<Var> {
        let sv = self.value(src);
        if sv.rows() != targets.len() {
            return Err(Error::Shape {
                op: "scatter_add_rows",
                left: sv.shape().to_vec(),
                right: vec![targets.len()],
            });
        }
        let cols = sv.cols();
        let mut out = Tensor::zeros(&[out_rows, cols]);
        for (r, &t) in targets.iter().enumerate() {
            if t >= out_rows {
                return Err(Error::Index {
                    what: "scatter_add_rows",
                    index: t,
                    size: out_rows,
                });
            }
            let src_row = &self.nodes[src.0].value.row(r).to_vec();
            for (o, &x) in out.row_mut(t).iter_mut().zip(src_row) {
                *o = *o + x;
            }
        }
        let rg = self.rg(&[src.0]);
        Ok(self.push(out, Op::ScatterAddRows(src.0, targets.to_vec()), rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(self.value(a).sum());
        let rg = self.rg(&[a.0]);
        self.push(out, Op::Sum(a.0), rg)
    }

    /// Summed categorical cross-entropy of each row of `logits` against the
    /// matching gold index. A rank-1 or single-row input is one example.
    ///
    /// Computed as `ln(1 + Σ_{j≠max} e^{z_j - z_max}) + z_max - z_gold`,
    /// which stays accurate when one logit dominates.
    pub fn softmax_cross_entropy(&mut self, logits: Var, gold: &[usize]) -> Result<Var> {
        let lv = self.value(logits);
        let (rows, cols) = (lv.rows(), lv.cols());
        if gold.len() != rows {
            return Err(Error::Shape {
                op: "softmax_cross_entropy",
                left: lv.shape().to_vec(),
                right: vec![gold.len()],
            });
        }
        let mut probs = Vec::with_capacity(rows * cols);
        let mut loss = T::zero();
        for (r, &g) in gold.iter().enumerate() {
            if g >= cols {
                return Err(Error::Index {
                    what: "gold label",
                    index: g,
                    size: cols,
                });
            }
            let row = lv.row(r);
            let p = softmax(row);
            let (arg, max) = argmax_with_value(row);
            let rest = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != arg)
                .fold(T::zero(), |acc, (_, &z)| acc + (z - max).exp());
            loss = loss + rest.ln_1p() + (max - row[g]);
            probs.extend(p);
        }
        let rg = self.rg(&[logits.0]);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::SoftmaxCrossEntropy {
                logits: logits.0,
                gold: gold.to_vec(),
                probs,
            },
            rg,
        ))
    }

    /// Iterate over the input values of every ReLU on the tape, in order.
    pub fn relu_inputs(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.nodes.iter().filter_map(move |n| match n.op {
            Op::Relu(a) => Some(self.nodes[a].value.as_ref()),
            _ => None,
        })
    }

    /// Reverse sweep from a scalar output.
    pub fn backward(&self, output: Var) -> Result<Gradients<T>> {
        if self.value(output).len() != 1 {
            return Err(Error::Shape {
                op: "backward",
                left: self.value(output).shape().to_vec(),
                right: vec![1],
            });
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(Tensor::ones(self.value(output).shape()));

        for i in (0..=output.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }

        let mut by_param = IndexMap::new();
        for (name, idx) in &self.params {
            if let Some(g) = &grads[*idx] {
                by_param
                    .entry(name.clone())
                    .and_modify(|acc: &mut Tensor<T>| acc.add_assign(g))
                    .or_insert_with(|| g.clone());
            }
        }
        Ok(Gradients { grads, by_param })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<T>>], idx: usize, f: impl FnOnce(&mut Tensor<T>)) {
        if !self.nodes[idx].requires_grad {
            return;
        }
        let slot = grads[idx].get_or_insert_with(|| Tensor::zeros(self.nodes[idx].value.shape()));
        f(slot);
    }

    fn propagate(&self, i: usize, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let out = &self.nodes[i].value;
        match &self.nodes[i].op {
            Op::Leaf => {}
            &Op::MatMul(a, b) => {
                let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
                let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                // dA = G·Bᵀ, dB = Aᵀ·G
                self.accumulate(grads, a, |acc| gemm_nt(g.data(), bv.data(), acc.data_mut(), m, n, k));
                self.accumulate(grads, b, |acc| gemm_tn(av.data(), g.data(), acc.data_mut(), m, k, n));
            }
            &Op::MatMulNt(a, b) => {
                let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
                let (m, k, n) = (av.rows(), av.cols(), bv.rows());
                // dA = G·B, dB = Gᵀ·A
                self.accumulate(grads, a, |acc| gemm_nn(g.data(), bv.data(), acc.data_mut(), m, n, k));
                self.accumulate(grads, b, |acc| gemm_tn(g.data(), av.data(), acc.data_mut(), m, n, k));
            }
            &Op::Add(a, b) => {
                self.accumulate(grads, a, |acc| acc.add_assign(g));
                let bl = self.nodes[b].value.len();
                self.accumulate(grads, b, |acc| {
                    if bl == g.len() {
                        acc.add_assign(g);
                    } else {
                        let d = acc.data_mut();
                        for (j, &x) in g.data().iter().enumerate() {
                            d[j % bl] = d[j % bl] + x;
                        }
                    }
                });
            }
            &Op::Mul(a, b) => {
                let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
                self.accumulate(grads, a, |acc| {
                    for ((o, &gx), &y) in acc.data_mut().iter_mut().zip(g.data()).zip(bv.data()) {
                        *o = *o + gx * y;
                    }
                });
                self.accumulate(grads, b, |acc| {
                    for ((o, &gx), &x) in acc.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                        *o = *o + gx * x;
                    }
                });
            }
            &Op::MulColumn(a, c) => {
                let (av, cv) = (&self.nodes[a].value, &self.nodes[c].value);
                let cols = av.cols();
                self.accumulate(grads, a, |acc| {
                    for (j, (o, &gx)) in acc.data_mut().iter_mut().zip(g.data()).enumerate() {
                        *o = *o + gx * cv.data()[j / cols];
                    }
                });
                self.accumulate(grads, c, |acc| {
                    let d = acc.data_mut();
                    for (j, (&gx, &x)) in g.data().iter().zip(av.data()).enumerate() {
                        d[j / cols] = d[j / cols] + gx * x;
                    }
                });
            }
            &Op::Scale(a, s) => {
                self.accumulate(grads, a, |acc| {
                    for (o, &gx) in acc.data_mut().iter_mut().zip(g.data()) {
                        *o = *o + gx * s;
                    }
                });
            }
            &Op::Sigmoid(a) => {
                self.accumulate(grads, a, |acc| {
                    for ((o, &gx), &y) in acc.data_mut().iter_mut().zip(g.data()).zip(out.data()) {
                        *o = *o + gx * y * (T::one() - y);
                    }
                });
            }
            &Op::Tanh(a) => {
                self.accumulate(grads, a, |acc| {
                    for ((o, &gx), &y) in acc.data_mut().iter_mut().zip(g.data()).zip(out.data()) {
                        *o = *o + gx * (T::one() - y * y);
                    }
                });
            }
            &Op::Relu(a) => {
                let av = &self.nodes[a].value;
                self.accumulate(grads, a, |acc| {
                    for ((o, &gx), &x) in acc.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                        if x > T::zero() {
                            *o = *o + gx;
                        }
                    }
                });
            }
            &Op::Row(a, r) => {
                self.accumulate(grads, a, |acc| {
                    for (o, &gx) in acc.row_mut(r).iter_mut().zip(g.data()) {
                        *o = *o + gx;
                    }
                });
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = self.nodes[p].value.len();
                    self.accumulate(grads, p, |acc| {
                        for (o, &gx) in acc.data_mut().iter_mut().zip(&g.data()[offset..offset + len]) {
                            *o = *o + gx;
                        }
                    });
                    offset += len;
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let c = self.nodes[p].value.cols();
                    self.accumulate(grads, p, |acc| {
                        for r in 0..g.rows() {
                            for (o, &gx) in acc.row_mut(r).iter_mut().zip(&g.row(r)[offset..offset + c]) {
                                *o = *o + gx;
                            }
                        }
                    });
                    offset += c;
                }
            }
            Op::GatherRows(table, indices) => {
                self.accumulate(grads, *table, |acc| {
                    for (r, &t) in indices.iter().enumerate() {
                        for (o, &gx) in acc.row_mut(t).iter_mut().zip(g.row(r)) {
                            *o = *o + gx;
                        }
                    }
                });
            }
            Op::ScatterAddRows(src, targets) => {
                self.accumulate(grads, *src, |acc| {
                    for (r, &t) in targets.iter().enumerate() {
                        for (o, &gx) in acc.row_mut(r).iter_mut().zip(g.row(t)) {
                            *o = *o + gx;
                        }
                    }
                });
            }
            &Op::Sum(a) => {
                let gx = g.data()[0];
                self.accumulate(grads, a, |acc| {
                    for o in acc.data_mut() {
                        *o = *o + gx;
                    }
                });
            }
            Op::SoftmaxCrossEntropy { logits, gold, probs } => {
                let gx = g.data()[0];
                let cols = self.nodes[*logits].value.cols();
                self.accumulate(grads, *logits, |acc| {
                    for (j, (o, &p)) in acc.data_mut().iter_mut().zip(probs).enumerate() {
                        let onehot = if gold[j / cols] == j % cols { T::one() } else { T::zero() };
                        *o = *o + gx * (p - onehot);
                    }
                });
            }
        }
    }
}

/// Result of [`Tape::backward`].
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
    by_param: IndexMap<String, Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn wrt(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradients of bound trainable parameters, summed over every binding.
    pub fn params(&self) -> &IndexMap<String, Tensor<T>> {
        &self.by_param
    }

    pub fn into_params(self) -> IndexMap<String, Tensor<T>> {
        self.by_param
    }
}

/// Logistic function evaluated without overflow and kept strictly inside
/// `(0, 1)` even where the exact value rounds to 0 or 1.
pub fn sigmoid_scalar<T: Scalar>(x: T) -> T {
    let y = if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    };
    let hi = T::one() - T::epsilon() / T::lit(2.0);
    y.max(T::min_positive_value()).min(hi)
}

/// Numerically stable softmax of one row.
pub fn softmax<T: Scalar>(row: &[T]) -> Vec<T> {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = row.iter().map(|&z| (z - max).exp()).collect();
    let total = exps.iter().fold(T::zero(), |a, &b| a + b);
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    argmax_with_value(row).0
}

fn argmax_with_value<T: Scalar>(row: &[T]) -> (usize, T) {
    let mut best = (0, row[0]);
    for (j, &z) in row.iter().enumerate().skip(1) {
        if z > best.1 {
            best = (j, z);
        }
    }
    best
}
