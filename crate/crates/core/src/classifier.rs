//! Role scoring for one predicate.
//!
//! `p(r | t_i, t_p, l) ∝ exp(W_{l,r} · (t_i ∘ t_p))` with
//! `W_{l,r} = ReLU(U (q_l ∘ q_r))`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{argmax, softmax, ParamStore, Scalar, Tape, Tensor, Var};

pub const U: &str = "cls.u";
pub const LEMMAS: &str = "cls.lemma";
pub const ROLES: &str = "cls.role";

const EMBED_RANGE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassifierDims {
    /// Encoder state width `m`; `U` produces `2m`-wide weight vectors.
    pub width: usize,
    pub d_l_out: usize,
    pub d_r: usize,
    pub num_lemmas: usize,
    pub num_roles: usize,
}

pub fn init_params<T: Scalar, R: Rng>(params: &mut ParamStore<T>, dims: ClassifierDims, rng: &mut R) {
    let fan_in = dims.d_l_out + dims.d_r;
    let limit = (6.0 / (fan_in + 2 * dims.width) as f64).sqrt();
    params.insert_uniform(U, &[2 * dims.width, fan_in], limit, rng);
    params.insert_uniform(LEMMAS, &[dims.num_lemmas, dims.d_l_out], EMBED_RANGE, rng);
    params.insert_uniform(ROLES, &[dims.num_roles, dims.d_r], EMBED_RANGE, rng);
}

pub fn num_roles<T: Scalar>(params: &ParamStore<T>) -> Result<usize> {
    Ok(params.value(ROLES)?.rows())
}

fn check_lemma<T: Scalar>(params: &ParamStore<T>, lemma: usize) -> Result<()> {
    let size = params.value(LEMMAS)?.rows();
    if lemma >= size {
        return Err(Error::Index {
            what: "output lemma",
            index: lemma,
            size,
        });
    }
    Ok(())
}

/// `W_{l,r}` computed directly from the stored tables.
pub fn role_weight<T: Scalar>(params: &ParamStore<T>, lemma: usize, role: usize) -> Result<Vec<T>> {
    check_lemma(params, lemma)?;
    let roles = params.value(ROLES)?;
    if role >= roles.rows() {
        return Err(Error::Index {
            what: "role",
            index: role,
            size: roles.rows(),
        });
    }
    let u = params.value(U)?;
    let q: Vec<T> = params.value(LEMMAS)?.row(lemma).iter().chain(roles.row(role)).copied().collect();
    Ok((0..u.rows())
        .map(|k| {
            let v = u.row(k).iter().zip(&q).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
            if v > T::zero() {
                v
            } else {
                T::zero()
            }
        })
        .collect())
}

/// Role distribution for a single token given `t_i` and `t_p`.
pub fn score_roles<T: Scalar>(params: &ParamStore<T>, t_i: &[T], t_p: &[T], lemma: usize) -> Result<Vec<T>> {
    let features: Vec<T> = t_i.iter().chain(t_p).copied().collect();
    let logits = (0..num_roles(params)?)
        .map(|r| {
            let w = role_weight(params, lemma, r)?;
            if w.len() != features.len() {
                return Err(Error::Shape {
                    op: "score_roles",
                    left: vec![w.len()],
                    right: vec![features.len()],
                });
            }
            Ok(w.iter().zip(&features).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(softmax(&logits))
}

/// Logits `[n × roles]` for every token of `encoded [n × m]` against the
/// predicate at row `predicate`.
pub fn role_logits<T: Scalar>(
    tape: &mut Tape<T>,
    params: &ParamStore<T>,
    encoded: Var,
    predicate: usize,
    lemma: usize,
) -> Result<Var> {
    check_lemma(params, lemma)?;
    let n = tape.value(encoded).rows();
    if predicate >= n {
        return Err(Error::Index {
            what: "predicate position",
            index: predicate,
            size: n,
        });
    }
    let roles = num_roles(params)?;
    let lemma_table = tape.param(params, LEMMAS)?;
    let role_table = tape.param(params, ROLES)?;
    let u = tape.param(params, U)?;
    let q_l = tape.gather_rows(lemma_table, &vec![lemma; roles])?;
    let q = tape.concat_cols(&[q_l, role_table])?;
    let pre = tape.matmul_nt(q, u)?;
    let w = tape.relu(pre);

    let t_p = tape.gather_rows(encoded, &vec![predicate; n])?;
    let features = tape.concat_cols(&[encoded, t_p])?;
    tape.matmul_nt(features, w)
}

/// Independent per-token decisions: argmax (lowest id on ties, so NULL
/// wins a uniform distribution) and the full distributions.
pub fn predict_arguments<T: Scalar>(
    params: &ParamStore<T>,
    encoded: &Tensor<T>,
    predicate: usize,
    lemma: usize,
) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let mut tape = Tape::new();
    let h = tape.constant(encoded.clone());
    let logits = role_logits(&mut tape, params, h, predicate, lemma)?;
    let logits = tape.value(logits);
    let mut labels = Vec::with_capacity(logits.rows());
    let mut dists = Vec::with_capacity(logits.rows());
    for i in 0..logits.rows() {
        let row = logits.row(i);
        labels.push(argmax(row));
        dists.push(softmax(row).iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect());
    }
    Ok((labels, dists))
}
