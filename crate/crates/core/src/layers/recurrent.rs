//! GRU, attention-gated GRU, bidirectional GRU and LSTM.

use super::{masked_update, Linear};
use crate::autodiff::{Graph, ParamId, ParamStore, Tensor, Var};
use crate::error::{Error, Result};
use rand::Rng;

/// Input and recurrent affine maps for one gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Gate {
    x: Linear,
    h: ParamId,
}

impl Gate {
    fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Result<Gate> {
        Ok(Gate {
            x: Linear::new(store, &format!("{name}.x"), input, hidden, rng)?,
            h: store.glorot(&format!("{name}.h"), &[hidden, hidden], hidden, hidden, rng)?,
        })
    }

    /// `x·Wx + bx + h·Wh`.
    fn pre(&self, g: &mut Graph, s: &ParamStore, x: Var, h: Var) -> Result<Var> {
        let a = self.x.forward(g, s, x)?;
        let u = g.param(s, self.h);
        let b = g.matmul(h, u)?;
        g.add(a, b)
    }
}

/// Reset-gated candidate `tanh(x·W + b + (r∘h)·U)`, `r = σ(x·Wr + br + h·Ur)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    reset: Gate,
    cand: Gate,
    pub hidden: usize,
}

impl Candidate {
    fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Result<Candidate> {
        Ok(Candidate {
            reset: Gate::new(store, &format!("{name}.r"), input, hidden, rng)?,
            cand: Gate::new(store, &format!("{name}.c"), input, hidden, rng)?,
            hidden,
        })
    }

    pub fn forward(&self, g: &mut Graph, s: &ParamStore, x: Var, h: Var) -> Result<Var> {
        let r = self.reset.pre(g, s, x, h)?;
        let r = g.sigmoid(r);
        let rh = g.mul(r, h)?;
        let c = self.cand.pre(g, s, x, rh)?;
        Ok(g.tanh(c))
    }
}

fn zero_state(g: &mut Graph, xs: &[Var], hidden: usize) -> Result<Var> {
    let first = xs.first().ok_or_else(|| Error::Contract("empty sequence".into()))?;
    let b = g.value(*first).rows();
    Ok(g.constant(Tensor::zeros(&[b, hidden])))
}

/// Standard GRU: `h' = z∘h̃ + (1 − z)∘h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruCell {
    update: Gate,
    pub candidate: Candidate,
}

impl GruCell {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Result<GruCell> {
        Ok(GruCell {
            update: Gate::new(store, &format!("{name}.z"), input, hidden, rng)?,
            candidate: Candidate::new(store, name, input, hidden, rng)?,
        })
    }

    pub fn hidden(&self) -> usize {
        self.candidate.hidden
    }

    pub fn step(&self, g: &mut Graph, s: &ParamStore, x: Var, h: Var) -> Result<Var> {
        let z = self.update.pre(g, s, x, h)?;
        let z = g.sigmoid(z);
        let c = self.candidate.forward(g, s, x, h)?;
        let zc = g.mul(z, c)?;
        let keep = g.one_minus(z);
        let kh = g.mul(keep, h)?;
        g.add(zc, kh)
    }

    /// Runs over `xs` from a zero state. `masks[t]` freezes rows whose
    /// sequence has ended (or not yet started, when run in reverse).
    pub fn run(&self, g: &mut Graph, s: &ParamStore, xs: &[Var], masks: &[Option<Var>], reverse: bool) -> Result<Vec<Var>> {
        let mut h = zero_state(g, xs, self.hidden())?;
        let mut out = vec![h; xs.len()];
        let order: Vec<usize> = if reverse { (0..xs.len()).rev().collect() } else { (0..xs.len()).collect() };
        for t in order {
            let n = self.step(g, s, xs[t], h)?;
            h = masked_update(g, masks.get(t).copied().flatten(), n, h)?;
            out[t] = h;
        }
        Ok(out)
    }
}

/// GRU whose update gate is an external attention weight:
/// `h_i = g_i∘h̃_i + (1 − g_i)∘h_{i−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttGru {
    pub candidate: Candidate,
}

impl AttGru {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Result<AttGru> {
        Ok(AttGru { candidate: Candidate::new(store, name, input, hidden, rng)? })
    }

    /// Final state after consuming `xs` with gates `gates[i]` (`[B, 1]`).
    pub fn run(&self, g: &mut Graph, s: &ParamStore, xs: &[Var], gates: &[Var]) -> Result<Var> {
        if xs.len() != gates.len() {
            return Err(Error::Contract(format!("{} inputs for {} gates", xs.len(), gates.len())));
        }
        for &gt in gates {
            if g.value(gt).data.iter().any(|&v| v < 0.0 || v > 1.0) {
                return Err(Error::Contract("attention gate outside [0, 1]".into()));
            }
        }
        let mut h = zero_state(g, xs, self.candidate.hidden)?;
        for (&x, &gt) in xs.iter().zip(gates) {
            let c = self.candidate.forward(g, s, x, h)?;
            let a = g.mul_col(c, gt)?;
            let keep = g.one_minus(gt);
            let kh = g.mul_col(h, keep)?;
            h = g.add(a, kh)?;
        }
        Ok(h)
    }
}

/// Forward and backward GRUs whose outputs are summed per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BiGru {
    pub fwd: GruCell,
    pub bwd: GruCell,
}

impl BiGru {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Result<BiGru> {
        Ok(BiGru {
            fwd: GruCell::new(store, &format!("{name}.fwd"), input, hidden, rng)?,
            bwd: GruCell::new(store, &format!("{name}.bwd"), input, hidden, rng)?,
        })
    }

    pub fn run(&self, g: &mut Graph, s: &ParamStore, xs: &[Var], masks: &[Option<Var>]) -> Result<Vec<Var>> {
        let f = self.fwd.run(g, s, xs, masks, false)?;
        let b = self.bwd.run(g, s, xs, masks, true)?;
        f.into_iter().zip(b).map(|(x, y)| g.add(x, y)).collect()
    }
}

/// LSTM: `c' = f∘c + i∘g`, `h' = o∘tanh(c')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmCell {
    input: Gate,
    forget: Gate,
    output: Gate,
    cell: Gate,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut R) -> Result<LstmCell> {
        Ok(LstmCell {
            input: Gate::new(store, &format!("{name}.i"), input, hidden, rng)?,
            forget: Gate::new(store, &format!("{name}.f"), input, hidden, rng)?,
            output: Gate::new(store, &format!("{name}.o"), input, hidden, rng)?,
            cell: Gate::new(store, &format!("{name}.g"), input, hidden, rng)?,
            hidden,
        })
    }

    /// One step; returns `(h', c')`.
    pub fn step(&self, g: &mut Graph, s: &ParamStore, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let i = self.input.pre(g, s, x, h)?;
        let i = g.sigmoid(i);
        let f = self.forget.pre(g, s, x, h)?;
        let f = g.sigmoid(f);
        let o = self.output.pre(g, s, x, h)?;
        let o = g.sigmoid(o);
        let cand = self.cell.pre(g, s, x, h)?;
        let cand = g.tanh(cand);
        Self::combine(g, i, f, o, cand, c)
    }

    /// Cell arithmetic given gate activations.
    pub fn combine(g: &mut Graph, i: Var, f: Var, o: Var, cand: Var, c: Var) -> Result<(Var, Var)> {
        let fc = g.mul(f, c)?;
        let ig = g.mul(i, cand)?;
        let c2 = g.add(fc, ig)?;
        let t = g.tanh(c2);
        let h2 = g.mul(o, t)?;
        Ok((h2, c2))
    }

    /// Final hidden state over `xs` from zero state, with per-step masks.
    pub fn run(&self, g: &mut Graph, s: &ParamStore, xs: &[Var], masks: &[Option<Var>]) -> Result<Var> {
        let mut h = zero_state(g, xs, self.hidden)?;
        let mut c = zero_state(g, xs, self.hidden)?;
        for (t, &x) in xs.iter().enumerate() {
            let (h2, c2) = self.step(g, s, x, h, c)?;
            let m = masks.get(t).copied().flatten();
            h = masked_update(g, m, h2, h)?;
            c = masked_update(g, m, c2, c)?;
        }
        Ok(h)
    }
}
