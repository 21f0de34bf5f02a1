//! Parameterized building blocks over the autodiff graph. Every layer works
//! on a batch: vectors are `[B, d]` rows, images are `[B, R·R]` or
//! `[B, C, H, W]`.

mod recurrent;
mod vision;

pub use recurrent::{AttGru, BiGru, Candidate, GruCell, LstmCell};
pub use vision::{ConvDecoder, ConvEncoder};

use crate::autodiff::{Graph, ParamId, ParamStore, Tensor, Var};
use crate::error::Result;
use rand::Rng;

/// `y = x·W + b` with `W` stored `[in, out]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, rng: &mut R) -> Result<Linear> {
        Ok(Linear {
            w: store.glorot(&format!("{name}.w"), &[fan_in, fan_out], fan_in, fan_out, rng)?,
            b: store.bias(&format!("{name}.b"), &[fan_out])?,
            fan_in,
            fan_out,
        })
    }

    pub fn forward(&self, g: &mut Graph, s: &ParamStore, x: Var) -> Result<Var> {
        let w = g.param(s, self.w);
        let b = g.param(s, self.b);
        let y = g.matmul(x, w)?;
        g.add_row(y, b)
    }
}

/// Linear layers with relu between them (not after the last).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FcStack {
    pub layers: Vec<Linear>,
}

impl FcStack {
    /// `dims` lists the widths from input to output.
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, dims: &[usize], rng: &mut R) -> Result<FcStack> {
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("{name}.{i}"), w[0], w[1], rng))
            .collect::<Result<_>>()?;
        Ok(FcStack { layers })
    }

    pub fn forward(&self, g: &mut Graph, s: &ParamStore, mut x: Var) -> Result<Var> {
        for (i, l) in self.layers.iter().enumerate() {
            if i > 0 {
                x = g.relu(x);
            }
            x = l.forward(g, s, x)?;
        }
        Ok(x)
    }
}

/// Word embedding table `[V, d]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Embedding {
    pub table: ParamId,
    pub vocab: usize,
    pub dim: usize,
}

impl Embedding {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, vocab: usize, dim: usize, rng: &mut R) -> Result<Embedding> {
        Ok(Embedding {
            table: store.glorot(name, &[vocab, dim], vocab, dim, rng)?,
            vocab,
            dim,
        })
    }

    /// One embedding row per id; `None` rows are zero.
    pub fn lookup(&self, g: &mut Graph, s: &ParamStore, ids: &[Option<usize>]) -> Result<Var> {
        let t = g.param(s, self.table);
        g.gather(t, ids)
    }

    /// Position-encoded sentence vectors, one row per token list.
    pub fn pe_encode(&self, g: &mut Graph, s: &ParamStore, rows: &[Vec<usize>]) -> Result<Var> {
        let t = g.param(s, self.table);
        g.pe_encode(t, rows)
    }
}

/// `[B, 1]` constant column of 0/1 flags, or `None` when every flag is set.
pub fn mask_column(g: &mut Graph, flags: &[bool]) -> Option<Var> {
    if flags.iter().all(|&f| f) {
        return None;
    }
    let data = flags.iter().map(|&f| if f { 1.0 } else { 0.0 }).collect();
    Some(g.constant(Tensor { shape: vec![flags.len(), 1], data }))
}

/// `m ∘ new + (1 − m) ∘ old` per row, or `new` when unmasked.
pub fn masked_update(g: &mut Graph, mask: Option<Var>, new: Var, old: Var) -> Result<Var> {
    let Some(m) = mask else {
        return Ok(new);
    };
    let a = g.mul_col(new, m)?;
    let keep = g.one_minus(m);
    let b = g.mul_col(old, keep)?;
    g.add(a, b)
}

#[cfg(test)]
mod tests;
