//! Central finite-difference verification of tape gradients.

use super::params::ParamStore;
use super::tape::{Tape, Var};
use crate::error::{Error, Result};

/// Relu inputs closer to zero than this are treated as sitting on the kink.
pub const KINK_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(parameter, flat index)` of the worst entry.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
    /// Entries skipped because the perturbation moved a relu input that
    /// lies within [`KINK_TOLERANCE`] of zero, or flipped an activation.
    pub skipped: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.checked > 0 && self.max_rel_error < tolerance
    }
}

/// `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps near-zero gradients
/// from turning f64 round-off into a large ratio.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

fn evaluate<F>(f: &F, params: &ParamStore<f64>) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&mut Tape<f64>, &ParamStore<f64>) -> Result<Var>,
{
    let mut tape = Tape::new();
    let out = f(&mut tape, params)?;
    let value = tape.value(out).data()[0];
    let relu: Vec<f64> = tape.relu_inputs().flat_map(|t| t.data().iter().copied()).collect();
    Ok((value, relu))
}

/// Compare the tape gradient of the scalar built by `f` against central
/// differences `(f(θ+h) − f(θ−h)) / 2h` for every trainable entry.
pub fn grad_check<F>(f: F, params: &ParamStore<f64>) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &ParamStore<f64>) -> Result<Var>,
{
    grad_check_with_step(f, params, DEFAULT_STEP)
}

pub fn grad_check_with_step<F>(f: F, params: &ParamStore<f64>, h: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &ParamStore<f64>) -> Result<Var>,
{
    let mut tape = Tape::new();
    let out = f(&mut tape, params)?;
    let base = tape.value(out).data()[0];
    if !base.is_finite() {
        return Err(Error::NonFinite(format!("objective at unperturbed parameters is {base}")));
    }
    let base_relu: Vec<f64> = tape.relu_inputs().flat_map(|t| t.data().iter().copied()).collect();
    let grads = tape.backward(out)?.into_params();
    drop(tape);

    let names: Vec<String> = params.trainable_names().map(str::to_string).collect();
    let mut work = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        skipped: 0,
    };

    for name in &names {
        let len = params.value(name)?.len();
        for i in 0..len {
            let orig = params.value(name)?.data()[i];

            work.value_mut(name)?.data_mut()[i] = orig + h;
            let (plus, relu_plus) = evaluate(&f, &work)?;
            work.value_mut(name)?.data_mut()[i] = orig - h;
            let (minus, relu_minus) = evaluate(&f, &work)?;
            work.value_mut(name)?.data_mut()[i] = orig;

            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!("objective while perturbing `{name}`[{i}]")));
            }
            if near_kink(&base_relu, &relu_plus, &relu_minus) {
                report.skipped += 1;
                continue;
            }

            let numeric = (plus - minus) / (2.0 * h);
            let analytic = grads.get(name).map_or(0.0, |g| g.data()[i]);
            let err = relative_error(analytic, numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((name.clone(), i));
            }
        }
    }
    Ok(report)
}

fn near_kink(base: &[f64], plus: &[f64], minus: &[f64]) -> bool {
    if base.len() != plus.len() || base.len() != minus.len() {
        return true;
    }
    base.iter().zip(plus).zip(minus).any(|((&b, &p), &m)| {
        let moved = p != b || m != b;
        let flipped = (p > 0.0) != (b > 0.0) || (m > 0.0) != (b > 0.0);
        flipped || (moved && b.abs() < KINK_TOLERANCE)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;

    #[test]
    fn quadratic_bowl_is_exact() {
        let mut params = ParamStore::new();
        params.insert("w", Tensor::from_f64(&[1, 4], &[0.3, -1.7, 2.2, 0.9]).unwrap(), true);
        params.insert("c", Tensor::from_f64(&[1, 4], &[1.0, 2.0, 3.0, 4.0]).unwrap(), false);
        let report = grad_check(
            |tape, p| {
                let w = tape.param(p, "w")?;
                let c = tape.param(p, "c")?;
                let wc = tape.mul(w, c)?;
                let sq = tape.mul(wc, w)?;
                Ok(tape.sum(sq))
            },
            &params,
        )
        .unwrap();
        assert_eq!(report.checked, 4);
        assert!(report.max_rel_error < 1e-8, "{report:?}");
    }

    #[test]
    fn relu_kink_entries_are_skipped() {
        let mut params = ParamStore::new();
        params.insert("x", Tensor::from_f64(&[1, 3], &[1e-6, 0.5, -0.8]).unwrap(), true);
        let report = grad_check(
            |tape, p| {
                let x = tape.param(p, "x")?;
                let r = tape.relu(x);
                let sq = tape.mul(r, r)?;
                Ok(tape.sum(sq))
            },
            &params,
        )
        .unwrap();
        assert_eq!(report.skipped, 1);
        assert_eq!(report.checked, 2);
        assert!(report.max_rel_error < 1e-6);
    }

    #[test]
    fn non_finite_objective_names_the_problem() {
        let mut params = ParamStore::new();
        params.insert("x", Tensor::from_f64(&[1, 1], &[f64::NAN]).unwrap(), true);
        let err = grad_check(|tape, p| Ok(tape.param(p, "x")?), &params).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }
}
