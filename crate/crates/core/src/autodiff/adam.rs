//! ADAM with bias correction.

use super::params::{ParamId, ParamStore};
use super::Tensor;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    pub fn new(store: &ParamStore, lr: f64) -> Adam {
        let zeros: Vec<Tensor> = store.iter().map(|(_, p)| Tensor::zeros(&p.value.shape)).collect();
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Applies one update. Nothing changes if any gradient is non-finite.
    pub fn step(&mut self, store: &mut ParamStore, grads: &[(ParamId, Tensor)]) -> Result<()> {
        for (id, g) in grads {
            let p = store.get(*id);
            if g.shape != p.value.shape {
                return Err(Error::Dimension {
                    op: "adam",
                    lhs: p.value.shape.clone(),
                    rhs: g.shape.clone(),
                });
            }
            if g.data.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteGradient(p.name.clone()));
            }
        }
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        for (id, g) in grads {
            let (m, v) = (&mut self.m[id.0], &mut self.v[id.0]);
            let w = &mut store.get_mut(*id).value.data;
            for i in 0..g.data.len() {
                let gi = g.data[i];
                m.data[i] = b1 * m.data[i] + (1.0 - b1) * gi;
                v.data[i] = b2 * v.data[i] + (1.0 - b2) * gi * gi;
                let mh = m.data[i] / c1;
                let vh = v.data[i] / c2;
                w[i] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
