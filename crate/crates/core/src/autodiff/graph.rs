//! Tape-based reverse-mode differentiation.
//!
//! A [`Graph`] records every operation as a node holding its forward value.
//! [`Graph::backward`] walks the nodes in reverse creation order, which is a
//! reverse topological order because inputs always precede their users.

use super::conv::{col2im, from_channel_major, im2col, to_channel_major, ConvGeom};
use super::params::{ParamId, ParamStore};
use super::tensor::{gemm, Tensor};
use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(ParamId),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulCol(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Abs(Var),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    MatMul(Var, Var),
    Concat(Vec<Var>),
    Slice(Var, usize, usize),
    Sum(Var),
    Mean(Var),
    Softmax(Var),
    CrossEntropy(Var, Vec<usize>, Vec<f64>),
    Reshape(Var),
    Conv(Var, Var, ConvGeom),
    Deconv(Var, Var, ConvGeom),
    ChannelBias(Var, Var),
    Gather(Var, Vec<Option<usize>>),
    PeGather(Var, Vec<Vec<usize>>),
}

struct Node {
    value: Tensor,
    op: Op,
    grad: bool,
}

/// A recording of one forward computation.
pub struct Graph {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
    train: bool,
    rng: ChaCha8Rng,
}

/// Gradients of leaves and parameters after [`Graph::backward`].
pub struct Gradients {
    leaves: HashMap<usize, Tensor>,
    params: Vec<(ParamId, Tensor)>,
}

impl Gradients {
    pub fn of(&self, v: Var) -> Option<&Tensor> {
        self.leaves.get(&v.0)
    }

    /// Parameter gradients in parameter-id order.
    pub fn params(&self) -> &[(ParamId, Tensor)] {
        &self.params
    }

    pub fn into_params(self) -> Vec<(ParamId, Tensor)> {
        self.params
    }
}

fn dim_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::Dimension {
        op,
        lhs: a.shape.clone(),
        rhs: b.shape.clone(),
    }
}

/// PE weight for 1-based word `j` of `jn` at 1-based coordinate `k` of `d`.
#[inline]
pub fn pe_weight(j: usize, jn: usize, k: usize, d: usize) -> f64 {
    let (j, jn, k, d) = (j as f64, jn as f64, k as f64, d as f64);
    (1.0 - j / jn) - (k / d) * (1.0 - 2.0 * j / jn)
}

impl Graph {
    /// `train` enables dropout; `seed` drives the dropout masks.
    pub fn new(train: bool, seed: u64) -> Graph {
        Graph {
            nodes: Vec::new(),
            params: HashMap::new(),
            train,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn is_training(&self) -> bool {
        self.train
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, grad: bool) -> Var {
        self.nodes.push(Node { value, op, grad });
        Var(self.nodes.len() - 1)
    }

    fn g(&self, v: Var) -> bool {
        self.nodes[v.0].grad
    }

    /// A value that receives no gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// A differentiable input leaf.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    /// The parameter's node, created on first use.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let v = self.push(store.get(id).value.clone(), Op::Param(id), true);
        self.params.insert(id, v);
        v
    }

    fn binary(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape != y.shape {
            return Err(dim_err(op, x, y));
        }
        Ok(Tensor {
            shape: x.shape.clone(),
            data: x.data.iter().zip(&y.data).map(|(&p, &q)| f(p, q)).collect(),
        })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.binary("add", a, b, |p, q| p + q)?;
        let g = self.g(a) || self.g(b);
        Ok(self.push(t, Op::Add(a, b), g))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.binary("sub", a, b, |p, q| p - q)?;
        let g = self.g(a) || self.g(b);
        Ok(self.push(t, Op::Sub(a, b), g))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.binary("mul", a, b, |p, q| p * q)?;
        let g = self.g(a) || self.g(b);
        Ok(self.push(t, Op::Mul(a, b), g))
    }

    /// `x[B, n] + b[n]` with `b` broadcast over rows.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(b));
        let n = xv.cols();
        if bv.len() != n || xv.shape.len() < 2 {
            return Err(dim_err("add_row", xv, bv));
        }
        let mut t = xv.clone();
        for r in t.data.chunks_mut(n) {
            for (a, c) in r.iter_mut().zip(&bv.data) {
                *a += c;
            }
        }
        let g = self.g(x) || self.g(b);
        Ok(self.push(t, Op::AddRow(x, b), g))
    }

    /// `x[B, …] ∘ c[B, 1]`: scales each row by its own scalar.
    pub fn mul_col(&mut self, x: Var, c: Var) -> Result<Var> {
        let (xv, cv) = (self.value(x), self.value(c));
        if cv.len() != xv.rows() || xv.shape.is_empty() {
            return Err(dim_err("mul_col", xv, cv));
        }
        let n = xv.cols();
        let mut t = xv.clone();
        for (r, s) in t.data.chunks_mut(n).zip(&cv.data) {
            r.iter_mut().for_each(|a| *a *= s);
        }
        let g = self.g(x) || self.g(c);
        Ok(self.push(t, Op::MulCol(x, c), g))
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Var {
        let t = self.value(x).map(|v| v * k);
        let g = self.g(x);
        self.push(t, Op::Scale(x, k), g)
    }

    pub fn add_scalar(&mut self, x: Var, k: f64) -> Var {
        let t = self.value(x).map(|v| v + k);
        let g = self.g(x);
        self.push(t, Op::AddScalar(x), g)
    }

    /// `1 − x`.
    pub fn one_minus(&mut self, x: Var) -> Var {
        let n = self.scale(x, -1.0);
        self.add_scalar(n, 1.0)
    }

    pub fn abs(&mut self, x: Var) -> Var {
        let t = self.value(x).map(f64::abs);
        let g = self.g(x);
        self.push(t, Op::Abs(x), g)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let t = self.value(x).map(|v| v.max(0.0));
        let g = self.g(x);
        self.push(t, Op::Relu(x), g)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let t = self.value(x).map(|v| 1.0 / (1.0 + (-v).exp()));
        let g = self.g(x);
        self.push(t, Op::Sigmoid(x), g)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let t = self.value(x).map(f64::tanh);
        let g = self.g(x);
        self.push(t, Op::Tanh(x), g)
    }

    /// `[m, k] · [k, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape.len() != 2 || bv.shape.len() != 2 || av.shape[1] != bv.shape[0] {
            return Err(dim_err("matmul", av, bv));
        }
        let (m, k, n) = (av.shape[0], av.shape[1], bv.shape[1]);
        let mut c = vec![0.0; m * n];
        gemm(m, k, n, &av.data, false, &bv.data, false, 0.0, &mut c);
        let g = self.g(a) || self.g(b);
        Ok(self.push(Tensor { shape: vec![m, n], data: c }, Op::MatMul(a, b), g))
    }

    /// Concatenates `[B, n_i]` matrices along columns.
    pub fn concat(&mut self, xs: &[Var]) -> Result<Var> {
        let first = self.value(*xs.first().ok_or_else(|| Error::Contract("concat of nothing".into()))?);
        let b = first.rows();
        for &x in xs {
            let v = self.value(x);
            if v.shape.len() != 2 || v.rows() != b {
                return Err(dim_err("concat", first, v));
            }
        }
        let widths: Vec<usize> = xs.iter().map(|&x| self.value(x).cols()).collect();
        let total: usize = widths.iter().sum();
        let mut data = vec![0.0; b * total];
        let mut off = 0;
        for (&x, &w) in xs.iter().zip(&widths) {
            let v = &self.value(x).data;
            for r in 0..b {
                data[r * total + off..][..w].copy_from_slice(&v[r * w..][..w]);
            }
            off += w;
        }
        let g = xs.iter().any(|&x| self.g(x));
        Ok(self.push(Tensor { shape: vec![b, total], data }, Op::Concat(xs.to_vec()), g))
    }

    /// Columns `lo..hi` of a `[B, n]` matrix.
    pub fn slice_cols(&mut self, x: Var, lo: usize, hi: usize) -> Result<Var> {
        let v = self.value(x);
        if v.shape.len() != 2 || lo > hi || hi > v.cols() {
            return Err(Error::Dimension {
                op: "slice_cols",
                lhs: v.shape.clone(),
                rhs: vec![lo, hi],
            });
        }
        let (b, n, w) = (v.rows(), v.cols(), hi - lo);
        let mut data = Vec::with_capacity(b * w);
        for r in 0..b {
            data.extend_from_slice(&v.data[r * n + lo..r * n + hi]);
        }
        let g = self.g(x);
        Ok(self.push(Tensor { shape: vec![b, w], data }, Op::Slice(x, lo, hi), g))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let t = Tensor::scalar(self.value(x).sum());
        let g = self.g(x);
        self.push(t, Op::Sum(x), g)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let t = Tensor::scalar(v.sum() / v.len().max(1) as f64);
        let g = self.g(x);
        self.push(t, Op::Mean(x), g)
    }

    /// Row-wise softmax of `[B, n]`. Entries where `mask` is false get
    /// probability exactly 0; every row needs at least one open entry.
    pub fn softmax(&mut self, x: Var, mask: Option<&[bool]>) -> Result<Var> {
        let v = self.value(x);
        let n = v.cols();
        if v.shape.len() != 2 || mask.is_some_and(|m| m.len() != v.len()) {
            return Err(Error::Dimension {
                op: "softmax",
                lhs: v.shape.clone(),
                rhs: vec![mask.map_or(0, |m| m.len())],
            });
        }
        let mut out = vec![0.0; v.len()];
        for r in 0..v.rows() {
            let row = &v.data[r * n..(r + 1) * n];
            let open = |j: usize| mask.is_none_or(|m| m[r * n + j]);
            if !(0..n).any(open) {
                return Err(Error::Contract("softmax row with every entry masked".into()));
            }
            let mx = (0..n).filter(|&j| open(j)).map(|j| row[j]).fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for j in (0..n).filter(|&j| open(j)) {
                let e = (row[j] - mx).exp();
                out[r * n + j] = e;
                z += e;
            }
            out[r * n..(r + 1) * n].iter_mut().for_each(|e| *e /= z);
        }
        let g = self.g(x);
        Ok(self.push(Tensor { shape: v.shape.clone(), data: out }, Op::Softmax(x), g))
    }

    /// Σ_b w_b · (−log softmax(logits_b)[t_b]) / B.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize], weights: Option<&[f64]>) -> Result<Var> {
        let v = self.value(logits);
        let (b, c) = (v.rows(), v.cols());
        if targets.len() != b || weights.is_some_and(|w| w.len() != b) {
            return Err(Error::Dimension {
                op: "cross_entropy",
                lhs: v.shape.clone(),
                rhs: vec![targets.len()],
            });
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= c) {
            return Err(Error::Contract(format!("class {t} out of range for {c} classes")));
        }
        let w: Vec<f64> = weights.map_or_else(|| vec![1.0; b], <[f64]>::to_vec);
        let mut loss = 0.0;
        for r in 0..b {
            let row = &v.data[r * c..(r + 1) * c];
            let mx = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            let lse = mx + row.iter().map(|x| (x - mx).exp()).sum::<f64>().ln();
            loss += w[r] * (lse - row[targets[r]]);
        }
        let g = self.g(logits);
        Ok(self.push(
            Tensor::scalar(loss / b as f64),
            Op::CrossEntropy(logits, targets.to_vec(), w),
            g,
        ))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let t = self.value(x).clone().reshape(shape)?;
        let g = self.g(x);
        Ok(self.push(t, Op::Reshape(x), g))
    }

    /// Convolution of `x[B, Cin, H, W]` with `w[Cout, Cin, k, k]`.
    pub fn conv2d(&mut self, x: Var, w: Var, stride: usize, pad: usize) -> Result<Var> {
        let (xv, wv) = (self.value(x), self.value(w));
        if xv.shape.len() != 4 || wv.shape.len() != 4 || xv.shape[1] != wv.shape[1] || wv.shape[2] != wv.shape[3] {
            return Err(dim_err("conv2d", xv, wv));
        }
        let (b, cin, h, wd) = (xv.shape[0], xv.shape[1], xv.shape[2], xv.shape[3]);
        let (cout, k) = (wv.shape[0], wv.shape[2]);
        let geom = ConvGeom::new(b, cin, h, wd, k, stride, pad).ok_or_else(|| dim_err("conv2d", xv, wv))?;
        let cols = im2col(&xv.data, &geom);
        let p = geom.ho * geom.wo;
        let mut y = vec![0.0; cout * b * p];
        gemm(cout, geom.col_rows(), b * p, &wv.data, false, &cols, false, 0.0, &mut y);
        let data = from_channel_major(&y, b, cout, p);
        let g = self.g(x) || self.g(w);
        Ok(self.push(
            Tensor { shape: vec![b, cout, geom.ho, geom.wo], data },
            Op::Conv(x, w, geom),
            g,
        ))
    }

    /// Transposed convolution of `x[B, Cin, h, w]` with `w[Cin, Cout, k, k]`:
    /// the adjoint of [`Graph::conv2d`] with the same stride and padding. The
    /// output is `(h − 1)·stride − 2·pad + k + output_padding` wide.
    pub fn deconv2d(&mut self, x: Var, w: Var, stride: usize, pad: usize, output_padding: usize) -> Result<Var> {
        let (xv, wv) = (self.value(x), self.value(w));
        if xv.shape.len() != 4 || wv.shape.len() != 4 || xv.shape[1] != wv.shape[0] || wv.shape[2] != wv.shape[3] {
            return Err(dim_err("deconv2d", xv, wv));
        }
        let (b, cin, h, wd) = (xv.shape[0], xv.shape[1], xv.shape[2], xv.shape[3]);
        let (cout, k) = (wv.shape[1], wv.shape[2]);
        let out = |n: usize| ((n - 1) * stride + k + output_padding).checked_sub(2 * pad);
        let (Some(ho), Some(wo)) = (out(h), out(wd)) else {
            return Err(dim_err("deconv2d", xv, wv));
        };
        // Geometry of the forward convolution that maps the output back to x.
        let geom = ConvGeom::new(b, cout, ho, wo, k, stride, pad).ok_or_else(|| dim_err("deconv2d", xv, wv))?;
        if geom.ho != h || geom.wo != wd || output_padding >= stride {
            return Err(dim_err("deconv2d", xv, wv));
        }
        let p = h * wd;
        let xm = to_channel_major(&xv.data, b, cin, p);
        let mut cols = vec![0.0; geom.col_rows() * b * p];
        gemm(geom.col_rows(), cin, b * p, &wv.data, true, &xm, false, 0.0, &mut cols);
        let data = col2im(&cols, &geom);
        let g = self.g(x) || self.g(w);
        Ok(self.push(Tensor { shape: vec![b, cout, ho, wo], data }, Op::Deconv(x, w, geom), g))
    }

    /// Adds `bias[C]` to every pixel of channel `C` in `x[B, C, …]`.
    pub fn channel_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(bias));
        if xv.shape.len() < 2 || bv.len() != xv.shape[1] {
            return Err(dim_err("channel_bias", xv, bv));
        }
        let p: usize = xv.shape[2..].iter().product();
        let mut t = xv.clone();
        for (i, chunk) in t.data.chunks_mut(p).enumerate() {
            let c = bv.data[i % bv.len()];
            chunk.iter_mut().for_each(|v| *v += c);
        }
        let g = self.g(x) || self.g(bias);
        Ok(self.push(t, Op::ChannelBias(x, bias), g))
    }

    /// Rows of `table[V, d]`; `None` gives a zero row.
    pub fn gather(&mut self, table: Var, ids: &[Option<usize>]) -> Result<Var> {
        let tv = self.value(table);
        let (v, d) = (tv.rows(), tv.cols());
        let mut data = vec![0.0; ids.len() * d];
        for (r, id) in ids.iter().enumerate() {
            if let Some(i) = *id {
                if i >= v {
                    return Err(Error::UnknownToken(format!("id {i} >= vocabulary {v}")));
                }
                data[r * d..(r + 1) * d].copy_from_slice(&tv.data[i * d..(i + 1) * d]);
            }
        }
        let g = self.g(table);
        Ok(self.push(
            Tensor { shape: vec![ids.len(), d], data },
            Op::Gather(table, ids.to_vec()),
            g,
        ))
    }

    /// Position-encoded bag of word embeddings, one output row per token list:
    /// `Σ_j l_j ∘ table[w_j]` with `l_kj = (1 − j/J) − (k/d)(1 − 2j/J)`.
    pub fn pe_encode(&mut self, table: Var, rows: &[Vec<usize>]) -> Result<Var> {
        let tv = self.value(table);
        let (v, d) = (tv.rows(), tv.cols());
        let mut data = vec![0.0; rows.len() * d];
        for (r, words) in rows.iter().enumerate() {
            let jn = words.len();
            for (j, &w) in words.iter().enumerate() {
                if w >= v {
                    return Err(Error::UnknownToken(format!("id {w} >= vocabulary {v}")));
                }
                let e = &tv.data[w * d..(w + 1) * d];
                for k in 0..d {
                    data[r * d + k] += pe_weight(j + 1, jn, k + 1, d) * e[k];
                }
            }
        }
        let g = self.g(table);
        Ok(self.push(
            Tensor { shape: vec![rows.len(), d], data },
            Op::PeGather(table, rows.to_vec()),
            g,
        ))
    }

    /// Inverted dropout: identity at evaluation time; in training, zeroes
    /// each unit with probability `rate` and scales survivors by 1/(1−rate).
    pub fn dropout(&mut self, x: Var, rate: f64) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Contract(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !self.train || rate == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - rate);
        let shape = self.value(x).shape.clone();
        let n = self.value(x).len();
        let data = (0..n)
            .map(|_| if self.rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let m = self.constant(Tensor { shape, data });
        self.mul(x, m)
    }

    /// Reverse pass from a scalar.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::Contract(format!("backward from non-scalar {:?}", lv.shape)));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::full(&lv.shape, 1.0));
        let mut leaves = HashMap::new();
        let mut params = Vec::new();
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.grad {
                continue;
            }
            let Some(dy) = grads[i].take() else {
                continue;
            };
            match &node.op {
                Op::Leaf => {
                    leaves.insert(i, dy);
                }
                Op::Param(id) => params.push((*id, dy)),
                op => self.propagate(op, &node.value, dy, &mut grads),
            }
        }
        // Parameters and leaves that never reached the loss get zeros.
        for (&id, &v) in &self.params {
            if !params.iter().any(|(p, _)| *p == id) {
                params.push((id, Tensor::zeros(&self.value(v).shape)));
            }
        }
        params.sort_by_key(|(id, _)| *id);
        for (i, n) in self.nodes.iter().enumerate() {
            if n.grad && matches!(n.op, Op::Leaf) {
                leaves.entry(i).or_insert_with(|| Tensor::zeros(&n.value.shape));
            }
        }
        Ok(Gradients { leaves, params })
    }

    fn acc(&self, grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
        if !self.g(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(t) => t.add_assign(&g),
            slot => *slot = Some(g),
        }
    }

    fn propagate(&self, op: &Op, y: &Tensor, dy: Tensor, grads: &mut [Option<Tensor>]) {
        let val = |v: &Var| &self.nodes[v.0].value;
        let zip = |a: &Tensor, f: &dyn Fn(f64, f64) -> f64| Tensor {
            shape: a.shape.clone(),
            data: a.data.iter().zip(&dy.data).map(|(&p, &q)| f(p, q)).collect(),
        };
        match op {
            Op::Leaf | Op::Param(_) => unreachable!(),
            Op::Add(a, b) => {
                self.acc(grads, *b, dy.clone());
                self.acc(grads, *a, dy);
            }
            Op::Sub(a, b) => {
                self.acc(grads, *b, dy.map(|v| -v));
                self.acc(grads, *a, dy);
            }
            Op::Mul(a, b) => {
                if self.g(*a) {
                    self.acc(grads, *a, zip(val(b), &|p, q| p * q));
                }
                if self.g(*b) {
                    self.acc(grads, *b, zip(val(a), &|p, q| p * q));
                }
            }
            Op::AddRow(x, b) => {
                if self.g(*b) {
                    let n = val(b).len();
                    let mut db = vec![0.0; n];
                    for r in dy.data.chunks(n) {
                        db.iter_mut().zip(r).for_each(|(a, c)| *a += c);
                    }
                    self.acc(grads, *b, Tensor { shape: val(b).shape.clone(), data: db });
                }
                self.acc(grads, *x, dy);
            }
            Op::MulCol(x, c) => {
                let (xv, cv) = (val(x), val(c));
                let n = xv.cols();
                if self.g(*c) {
                    let dc = dy
                        .data
                        .chunks(n)
                        .zip(xv.data.chunks(n))
                        .map(|(d, x)| d.iter().zip(x).map(|(p, q)| p * q).sum())
                        .collect();
                    self.acc(grads, *c, Tensor { shape: cv.shape.clone(), data: dc });
                }
                if self.g(*x) {
                    let mut dx = dy;
                    for (r, s) in dx.data.chunks_mut(n).zip(&cv.data) {
                        r.iter_mut().for_each(|a| *a *= s);
                    }
                    self.acc(grads, *x, dx);
                }
            }
            Op::Scale(x, k) => self.acc(grads, *x, dy.map(|v| v * k)),
            Op::AddScalar(x) | Op::Reshape(x) => {
                let shape = val(x).shape.clone();
                self.acc(grads, *x, Tensor { shape, data: dy.data });
            }
            Op::Abs(x) => {
                let d = zip(val(x), &|p, q| if p > 0.0 { q } else if p < 0.0 { -q } else { 0.0 });
                self.acc(grads, *x, d);
            }
            Op::Relu(x) => {
                let d = zip(val(x), &|p, q| if p > 0.0 { q } else { 0.0 });
                self.acc(grads, *x, d);
            }
            Op::Sigmoid(x) => self.acc(grads, *x, zip(y, &|s, q| q * s * (1.0 - s))),
            Op::Tanh(x) => self.acc(grads, *x, zip(y, &|t, q| q * (1.0 - t * t))),
            Op::MatMul(a, b) => {
                let (av, bv) = (val(a), val(b));
                let (m, k, n) = (av.shape[0], av.shape[1], bv.shape[1]);
                if self.g(*a) {
                    let mut da = vec![0.0; m * k];
                    gemm(m, n, k, &dy.data, false, &bv.data, true, 0.0, &mut da);
                    self.acc(grads, *a, Tensor { shape: av.shape.clone(), data: da });
                }
                if self.g(*b) {
                    let mut db = vec![0.0; k * n];
                    gemm(k, m, n, &av.data, true, &dy.data, false, 0.0, &mut db);
                    self.acc(grads, *b, Tensor { shape: bv.shape.clone(), data: db });
                }
            }
            Op::Concat(xs) => {
                let b = dy.rows();
                let total = dy.cols();
                let mut off = 0;
                for x in xs {
                    let w = val(x).cols();
                    if self.g(*x) {
                        let mut d = Vec::with_capacity(b * w);
                        for r in 0..b {
                            d.extend_from_slice(&dy.data[r * total + off..][..w]);
                        }
                        self.acc(grads, *x, Tensor { shape: val(x).shape.clone(), data: d });
                    }
                    off += w;
                }
            }
            Op::Slice(x, lo, hi) => {
                let xv = val(x);
                let (n, w) = (xv.cols(), hi - lo);
                let mut d = vec![0.0; xv.len()];
                for r in 0..xv.rows() {
                    d[r * n + lo..r * n + hi].copy_from_slice(&dy.data[r * w..(r + 1) * w]);
                }
                self.acc(grads, *x, Tensor { shape: xv.shape.clone(), data: d });
            }
            Op::Sum(x) => {
                let g = dy.item();
                self.acc(grads, *x, Tensor::full(&val(x).shape, g));
            }
            Op::Mean(x) => {
                let xv = val(x);
                let g = dy.item() / xv.len().max(1) as f64;
                self.acc(grads, *x, Tensor::full(&xv.shape, g));
            }
            Op::Softmax(x) => {
                let n = y.cols();
                let mut d = vec![0.0; y.len()];
                for r in 0..y.rows() {
                    let (yr, gr) = (&y.data[r * n..(r + 1) * n], &dy.data[r * n..(r + 1) * n]);
                    let s: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for j in 0..n {
                        d[r * n + j] = yr[j] * (gr[j] - s);
                    }
                }
                self.acc(grads, *x, Tensor { shape: y.shape.clone(), data: d });
            }
            Op::CrossEntropy(logits, targets, w) => {
                let v = val(logits);
                let (b, c) = (v.rows(), v.cols());
                let g = dy.item() / b as f64;
                let mut d = vec![0.0; v.len()];
                for r in 0..b {
                    let row = &v.data[r * c..(r + 1) * c];
                    let mx = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
                    let z: f64 = row.iter().map(|x| (x - mx).exp()).sum();
                    for j in 0..c {
                        let p = (row[j] - mx).exp() / z;
                        let t = if j == targets[r] { 1.0 } else { 0.0 };
                        d[r * c + j] = g * w[r] * (p - t);
                    }
                }
                self.acc(grads, *logits, Tensor { shape: v.shape.clone(), data: d });
            }
            Op::Conv(x, w, geom) => {
                let (xv, wv) = (val(x), val(w));
                let (b, cout, p) = (geom.batch, wv.shape[0], geom.ho * geom.wo);
                let dym = to_channel_major(&dy.data, b, cout, p);
                if self.g(*w) {
                    let cols = im2col(&xv.data, geom);
                    let mut dw = vec![0.0; wv.len()];
                    gemm(cout, b * p, geom.col_rows(), &dym, false, &cols, true, 0.0, &mut dw);
                    self.acc(grads, *w, Tensor { shape: wv.shape.clone(), data: dw });
                }
                if self.g(*x) {
                    let mut dcols = vec![0.0; geom.col_rows() * b * p];
                    gemm(geom.col_rows(), cout, b * p, &wv.data, true, &dym, false, 0.0, &mut dcols);
                    let dx = col2im(&dcols, geom);
                    self.acc(grads, *x, Tensor { shape: xv.shape.clone(), data: dx });
                }
            }
            Op::Deconv(x, w, geom) => {
                let (xv, wv) = (val(x), val(w));
                let (b, cin, p) = (geom.batch, wv.shape[0], geom.ho * geom.wo);
                let dcols = im2col(&dy.data, geom);
                if self.g(*w) {
                    let xm = to_channel_major(&xv.data, b, cin, p);
                    let mut dw = vec![0.0; wv.len()];
                    gemm(cin, b * p, geom.col_rows(), &xm, false, &dcols, true, 0.0, &mut dw);
                    self.acc(grads, *w, Tensor { shape: wv.shape.clone(), data: dw });
                }
                if self.g(*x) {
                    let mut dxm = vec![0.0; cin * b * p];
                    gemm(cin, geom.col_rows(), b * p, &wv.data, false, &dcols, false, 0.0, &mut dxm);
                    let dx = from_channel_major(&dxm, b, cin, p);
                    self.acc(grads, *x, Tensor { shape: xv.shape.clone(), data: dx });
                }
            }
            Op::ChannelBias(x, bias) => {
                if self.g(*bias) {
                    let bv = val(bias);
                    let c = bv.len();
                    let p: usize = dy.shape[2..].iter().product();
                    let mut db = vec![0.0; c];
                    for (i, chunk) in dy.data.chunks(p).enumerate() {
                        db[i % c] += chunk.iter().sum::<f64>();
                    }
                    self.acc(grads, *bias, Tensor { shape: bv.shape.clone(), data: db });
                }
                self.acc(grads, *x, dy);
            }
            Op::Gather(table, ids) => {
                let tv = val(table);
                let d = tv.cols();
                let mut dt = vec![0.0; tv.len()];
                for (r, id) in ids.iter().enumerate() {
                    if let Some(i) = *id {
                        for k in 0..d {
                            dt[i * d + k] += dy.data[r * d + k];
                        }
                    }
                }
                self.acc(grads, *table, Tensor { shape: tv.shape.clone(), data: dt });
            }
            Op::PeGather(table, rows) => {
                let tv = val(table);
                let d = tv.cols();
                let mut dt = vec![0.0; tv.len()];
                for (r, words) in rows.iter().enumerate() {
                    let jn = words.len();
                    for (j, &w) in words.iter().enumerate() {
                        for k in 0..d {
                            dt[w * d + k] += pe_weight(j + 1, jn, k + 1, d) * dy.data[r * d + k];
                        }
                    }
                }
                self.acc(grads, *table, Tensor { shape: tv.shape.clone(), data: dt });
            }
        }
    }
}
