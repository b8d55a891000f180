use std::sync::Arc;

use indexmap::IndexMap;
use rand::Rng;

use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Param<T> {
    pub value: Arc<Tensor<T>>,
    pub trainable: bool,
}

/// Named model parameters, kept in registration order.
///
/// Registration order is the iteration order everywhere (optimizer,
/// checkpoints, gradient checks), which keeps runs reproducible.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T> {
    params: IndexMap<String, Param<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            params: IndexMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<T>, trainable: bool) {
        self.params.insert(
            name.into(),
            Param {
                value: Arc::new(value),
                trainable,
            },
        );
    }

    /// Register a trainable tensor filled uniformly from `[-limit, limit]`.
    pub fn insert_uniform<R: Rng>(&mut self, name: &str, shape: &[usize], limit: f64, rng: &mut R) {
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| T::lit(if limit > 0.0 { rng.gen_range(-limit..=limit) } else { 0.0 }))
            .collect();
        self.insert(name, Tensor::new(shape.to_vec(), data).expect("shape"), true);
    }

    pub fn get(&self, name: &str) -> Option<&Param<T>> {
        self.params.get(name)
    }

    pub fn value(&self, name: &str) -> Result<&Tensor<T>> {
        self.params
            .get(name)
            .map(|p| p.value.as_ref())
            .ok_or_else(|| Error::contract(format!("unknown parameter `{name}`")))
    }

    pub fn value_mut(&mut self, name: &str) -> Result<&mut Tensor<T>> {
        self.params
            .get_mut(name)
            .map(|p| Arc::make_mut(&mut p.value))
            .ok_or_else(|| Error::contract(format!("unknown parameter `{name}`")))
    }

    pub fn set_trainable(&mut self, name: &str, trainable: bool) -> Result<()> {
        self.params
            .get_mut(name)
            .map(|p| p.trainable = trainable)
            .ok_or_else(|| Error::contract(format!("unknown parameter `{name}`")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param<T>)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param<T>)> {
        self.params.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn trainable_names(&self) -> impl Iterator<Item = &str> {
        self.params
            .iter()
            .filter(|(_, p)| p.trainable)
            .map(|(k, _)| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.values().map(|p| p.value.len()).sum()
    }

    /// Replace values from a loaded checkpoint. Every stored parameter must
    /// be present with the same shape.
    pub fn load_values(&mut self, loaded: IndexMap<String, Tensor<T>>) -> Result<()> {
        for (name, param) in &self.params {
            match loaded.get(name) {
                None => {
                    return Err(Error::contract(format!(
                        "checkpoint is missing parameter `{name}`"
                    )))
                }
                Some(t) if t.shape() != param.value.shape() => {
                    return Err(Error::Shape {
                        op: "load_values",
                        left: param.value.shape().to_vec(),
                        right: t.shape().to_vec(),
                    })
                }
                Some(_) => {}
            }
        }
        if let Some(extra) = loaded.keys().find(|k| !self.params.contains_key(*k)) {
            return Err(Error::contract(format!(
                "checkpoint has unexpected parameter `{extra}`"
            )));
        }
        for (name, tensor) in loaded {
            if let Some(p) = self.params.get_mut(&name) {
                p.value = Arc::new(tensor);
            }
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|(k, p)| {
                    (
                        k.clone(),
                        Param {
                            value: Arc::new(p.value.cast()),
                            trainable: p.trainable,
                        },
                    )
                })
                .collect(),
        }
    }

    /// `(name, L2 norm)` for every parameter; used in non-finite loss dumps.
    pub fn norms(&self) -> Vec<(String, f64)> {
        self.params
            .iter()
            .map(|(k, p)| (k.clone(), p.value.norm().to_f64().unwrap_or(f64::NAN)))
            .collect()
    }
}
