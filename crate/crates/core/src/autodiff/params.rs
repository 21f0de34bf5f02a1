//! Named parameter tables.

use super::Tensor;
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    /// Weight matrices and kernels take l2 decay; biases do not.
    pub decay: bool,
}

/// Parameters in registration order, addressable by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    params: Vec<Param>,
    index: BTreeMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: Tensor, decay: bool) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::Contract(format!("parameter `{name}` registered twice")));
        }
        let id = ParamId(self.params.len());
        self.params.push(Param {
            name: name.to_string(),
            value,
            decay,
        });
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Uniform ±sqrt(6 / (fan_in + fan_out)).
    pub fn glorot<R: Rng + ?Sized>(
        &mut self,
        name: &str,
        shape: &[usize],
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> Result<ParamId> {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-a..=a)).collect();
        self.insert(name, Tensor::new(shape, data)?, true)
    }

    pub fn bias(&mut self, name: &str, shape: &[usize]) -> Result<ParamId> {
        self.insert(name, Tensor::zeros(shape), false)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<&Param> {
        self.id(name).map(|id| self.get(id))
    }

    pub fn by_name_mut(&mut self, name: &str) -> Option<&mut Param> {
        self.id(name).map(|id| &mut self.params[id.0])
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    /// Total number of scalars.
    pub fn count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// ½ Σ w² over decayed parameters.
    pub fn half_sq_norm(&self) -> f64 {
        self.params
            .iter()
            .filter(|p| p.decay)
            .map(|p| 0.5 * p.value.dot(&p.value))
            .sum()
    }

    /// Copies every parameter whose name and shape also exist in `src`.
    /// Returns the names copied.
    pub fn copy_matching(&mut self, src: &ParamStore) -> Vec<String> {
        let mut copied = Vec::new();
        for p in self.params.iter_mut() {
            if let Some(q) = src.by_name(&p.name) {
                if q.value.shape == p.value.shape {
                    p.value = q.value.clone();
                    copied.push(p.name.clone());
                }
            }
        }
        copied
    }
}
