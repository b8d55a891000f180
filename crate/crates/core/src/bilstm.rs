//! Stacked bidirectional LSTM.

use rand::Rng;

use crate::error::Result;
use crate::numerics::{ParamStore, Scalar, Tape, Tensor, Var};

const INIT_RANGE: f64 = 0.05;
const FORGET_BIAS: f64 = 1.0;

/// Gate order used in parameter names and bound-parameter arrays.
pub const GATES: [&str; 4] = ["i", "f", "o", "g"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Forward,
    Backward,
}

impl Side {
    fn tag(self) -> &'static str {
        match self {
            Side::Forward => "fwd",
            Side::Backward => "bwd",
        }
    }
}

pub fn param_name(layer: usize, side: Side, kind: &str, gate: &str) -> String {
    format!("lstm.l{layer}.{}.{kind}_{gate}", side.tag())
}

/// Register parameters for `layers` BiLSTM layers over `input_dim`-wide
/// inputs: per gate `W [d_h × in]`, `U [d_h × d_h]`, `b [1 × d_h]`.
pub fn init_params<T: Scalar, R: Rng>(
    params: &mut ParamStore<T>,
    input_dim: usize,
    d_h: usize,
    layers: usize,
    rng: &mut R,
) {
    for layer in 0..layers {
        let in_dim = if layer == 0 { input_dim } else { 2 * d_h };
        for side in [Side::Forward, Side::Backward] {
            for gate in GATES {
                params.insert_uniform(&param_name(layer, side, "w", gate), &[d_h, in_dim], INIT_RANGE, rng);
                params.insert_uniform(&param_name(layer, side, "u", gate), &[d_h, d_h], INIT_RANGE, rng);
                let bias = if gate == "f" { FORGET_BIAS } else { 0.0 };
                params.insert(
                    param_name(layer, side, "b", gate),
                    Tensor::full(&[1, d_h], T::lit(bias)),
                    true,
                );
            }
        }
    }
}

/// One direction's parameters bound on a tape.
#[derive(Clone, Copy, Debug)]
pub struct CellVars {
    pub w: [Var; 4],
    pub u: [Var; 4],
    pub b: [Var; 4],
}

impl CellVars {
    pub fn bind<T: Scalar>(tape: &mut Tape<T>, params: &ParamStore<T>, layer: usize, side: Side) -> Result<Self> {
        let mut bind = |kind: &str| -> Result<[Var; 4]> {
            let v = GATES
                .iter()
                .map(|gate| tape.param(params, &param_name(layer, side, kind, gate)))
                .collect::<Result<Vec<_>>>()?;
            Ok([v[0], v[1], v[2], v[3]])
        };
        Ok(CellVars {
            w: bind("w")?,
            u: bind("u")?,
            b: bind("b")?,
        })
    }
}

/// Standard LSTM step on `1 × in` / `1 × d_h` rows:
/// `i, f, o = σ(·)`, `g = tanh(·)`, `c = f⊙c' + i⊙g`, `h = o⊙tanh(c)`.
pub fn lstm_cell<T: Scalar>(tape: &mut Tape<T>, x: Var, h_prev: Var, c_prev: Var, cell: &CellVars) -> Result<(Var, Var)> {
    let mut proj = [x; 4];
    for (k, p) in proj.iter_mut().enumerate() {
        *p = tape.matmul_nt(x, cell.w[k])?;
    }
    cell_from_projection(tape, proj, h_prev, c_prev, cell)
}

fn cell_from_projection<T: Scalar>(
    tape: &mut Tape<T>,
    input_proj: [Var; 4],
    h_prev: Var,
    c_prev: Var,
    cell: &CellVars,
) -> Result<(Var, Var)> {
    let mut pre = [h_prev; 4];
    for k in 0..4 {
        let rec = tape.matmul_nt(h_prev, cell.u[k])?;
        let sum = tape.add(input_proj[k], rec)?;
        pre[k] = tape.add(sum, cell.b[k])?;
    }
    let i = tape.sigmoid(pre[0]);
    let f = tape.sigmoid(pre[1]);
    let o = tape.sigmoid(pre[2]);
    let g = tape.tanh(pre[3]);
    let keep = tape.mul(f, c_prev)?;
    let write = tape.mul(i, g)?;
    let c = tape.add(keep, write)?;
    let tc = tape.tanh(c);
    let h = tape.mul(o, tc)?;
    Ok((h, c))
}

/// Run one direction over the rows of `x`; returns `n × d_h` states in
/// sentence order.
fn run_direction<T: Scalar>(tape: &mut Tape<T>, x: Var, cell: &CellVars, d_h: usize, side: Side) -> Result<Var> {
    let n = tape.value(x).rows();
    let mut proj_all = [x; 4];
    for k in 0..4 {
        proj_all[k] = tape.matmul_nt(x, cell.w[k])?;
    }
    let mut h = tape.constant(Tensor::zeros(&[1, d_h]));
    let mut c = tape.constant(Tensor::zeros(&[1, d_h]));
    let mut states = vec![h; n];
    let order: Vec<usize> = match side {
        Side::Forward => (0..n).collect(),
        Side::Backward => (0..n).rev().collect(),
    };
    for t in order {
        let mut proj = [x; 4];
        for k in 0..4 {
            proj[k] = tape.row(proj_all[k], t)?;
        }
        (h, c) = cell_from_projection(tape, proj, h, c, cell)?;
        states[t] = h;
    }
    tape.concat_rows(&states)
}

/// `J` stacked BiLSTM layers over `x [n × in]`; row `i` of the result is
/// the forward state after `x_1..x_i` joined with the backward state after
/// `x_n..x_i`.
pub fn bilstm_encode<T: Scalar>(
    tape: &mut Tape<T>,
    params: &ParamStore<T>,
    x: Var,
    d_h: usize,
    layers: usize,
) -> Result<Var> {
    let mut input = x;
    for layer in 0..layers {
        let fwd_cell = CellVars::bind(tape, params, layer, Side::Forward)?;
        let bwd_cell = CellVars::bind(tape, params, layer, Side::Backward)?;
        let fwd = run_direction(tape, input, &fwd_cell, d_h, Side::Forward)?;
        let bwd = run_direction(tape, input, &bwd_cell, d_h, Side::Backward)?;
        input = tape.concat_cols(&[fwd, bwd])?;
    }
    Ok(input)
}
