use indexmap::IndexMap;

use super::params::ParamStore;
use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for every trainable parameter.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    step: u64,
    first: IndexMap<String, Tensor<T>>,
    second: IndexMap<String, Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            first: IndexMap::new(),
            second: IndexMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn second_moment(&self, name: &str) -> Option<&Tensor<T>> {
        self.second.get(name)
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.config.learning_rate = lr;
    }

    /// One bias-corrected Adam update. Every trainable parameter must have
    /// a gradient; frozen parameters are skipped.
    pub fn step(&mut self, params: &mut ParamStore<T>, grads: &IndexMap<String, Tensor<T>>) -> Result<()> {
        if let Some(missing) = params.trainable_names().find(|n| !grads.contains_key(*n)) {
            return Err(Error::contract(format!("missing gradient for trainable parameter `{missing}`")));
        }
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let bias1 = 1.0 - c.beta1.powi(t);
        let bias2 = 1.0 - c.beta2.powi(t);
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let (lr, eps) = (T::lit(c.learning_rate), T::lit(c.epsilon));
        let (bc1, bc2) = (T::lit(bias1), T::lit(bias2));

        for (name, param) in params.iter_mut() {
            if !param.trainable {
                continue;
            }
            let g = &grads[name];
            if g.shape() != param.value.shape() {
                return Err(Error::Shape {
                    op: "adam_step",
                    left: param.value.shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
            let m = self
                .first
                .entry(name.to_string())
                .or_insert_with(|| Tensor::zeros(g.shape()));
            let v = self
                .second
                .entry(name.to_string())
                .or_insert_with(|| Tensor::zeros(g.shape()));
            let w = std::sync::Arc::make_mut(&mut param.value);
            for (((wi, mi), vi), &gi) in w
                .data_mut()
                .iter_mut()
                .zip(m.data_mut())
                .zip(v.data_mut())
                .zip(g.data())
            {
                *mi = b1 * *mi + (T::one() - b1) * gi;
                *vi = b2 * *vi + (T::one() - b2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *wi = *wi - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tape;

    fn store(values: &[f64]) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.insert("w", Tensor::from_f64(&[1, values.len()], values).unwrap(), true);
        s
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut params = store(&[0.3, -1.2, 4.0]);
        let before = params.value("w").unwrap().clone();
        let mut adam = AdamState::new(AdamConfig::default());
        let mut grads = IndexMap::new();
        grads.insert("w".to_string(), Tensor::zeros(&[1, 3]));
        adam.step(&mut params, &grads).unwrap();
        assert_eq!(params.value("w").unwrap(), &before);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut params = store(&[0.5, -2.0]);
        let mut adam = AdamState::new(AdamConfig::default());
        let mut grads = IndexMap::new();
        grads.insert("w".to_string(), Tensor::ones(&[1, 2]));
        adam.step(&mut params, &grads).unwrap();
        let expected = 0.01 * 1.0 / (1.0 + 1e-8);
        let w = params.value("w").unwrap().data();
        assert!((0.5 - w[0] - expected).abs() < 1e-12);
        assert!((-2.0 - w[1] - expected).abs() < 1e-12);
    }

    #[test]
    fn missing_gradient_is_a_contract_error() {
        let mut params = store(&[1.0]);
        let mut adam = AdamState::new(AdamConfig::default());
        let err = adam.step(&mut params, &IndexMap::new()).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        assert_eq!(adam.step_count(), 0);
    }

    #[test]
    fn quadratic_descends_towards_minimum() {
        let mut params = store(&[1.0]);
        let mut adam = AdamState::new(AdamConfig::default());
        let mut prev = 1.0;
        for _ in 0..300 {
            let mut tape = Tape::new();
            let w = tape.param(&params, "w").unwrap();
            let sq = tape.mul(w, w).unwrap();
            let loss = tape.sum(sq);
            let grads = tape.backward(loss).unwrap().into_params();
            adam.step(&mut params, &grads).unwrap();
            let now = params.value("w").unwrap().data()[0];
            if prev > 0.05 {
                assert!(now < prev, "{now} !< {prev}");
            }
            prev = now;
            for &v in adam.second_moment("w").unwrap().data() {
                assert!(v >= 0.0);
            }
        }
        assert!(prev.abs() < 0.1, "{prev}");
    }
}
