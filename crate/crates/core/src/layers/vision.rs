//! Convolutional image encoder and transposed-convolution decoder.

use super::Linear;
use crate::autodiff::{Graph, ParamId, ParamStore, Var};
use crate::error::{Error, Result};
use rand::Rng;

/// Channel widths of the two hidden feature maps.
pub const CHANNELS: [usize; 2] = [8, 16];
const KERNEL: usize = 3;

fn check_resolution(res: usize) -> Result<()> {
    if res == 0 || res % 4 != 0 {
        return Err(Error::Contract(format!("resolution {res} is not a positive multiple of 4")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ConvLayer {
    w: ParamId,
    b: ParamId,
}

impl ConvLayer {
    /// Conv kernel `[out, in, k, k]`, or deconv kernel `[in, out, k, k]`.
    fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, cin: usize, cout: usize, transposed: bool, rng: &mut R) -> Result<ConvLayer> {
        let kk = KERNEL * KERNEL;
        let shape = if transposed { [cin, cout, KERNEL, KERNEL] } else { [cout, cin, KERNEL, KERNEL] };
        Ok(ConvLayer {
            w: store.glorot(&format!("{name}.w"), &shape, cin * kk, cout * kk, rng)?,
            b: store.bias(&format!("{name}.b"), &[cout])?,
        })
    }
}

/// `R×R` image → `d` vector: two stride-2 convs with relu, then FC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvEncoder {
    c1: ConvLayer,
    c2: ConvLayer,
    fc: Linear,
    pub res: usize,
    pub dim: usize,
}

impl ConvEncoder {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, res: usize, dim: usize, rng: &mut R) -> Result<ConvEncoder> {
        check_resolution(res)?;
        let q = res / 4;
        Ok(ConvEncoder {
            c1: ConvLayer::new(store, &format!("{name}.conv1"), 1, CHANNELS[0], false, rng)?,
            c2: ConvLayer::new(store, &format!("{name}.conv2"), CHANNELS[0], CHANNELS[1], false, rng)?,
            fc: Linear::new(store, &format!("{name}.fc"), CHANNELS[1] * q * q, dim, rng)?,
            res,
            dim,
        })
    }

    /// `x` is `[B, R·R]`; returns `[B, d]`.
    pub fn forward(&self, g: &mut Graph, s: &ParamStore, x: Var) -> Result<Var> {
        let b = g.value(x).rows();
        let r = self.res;
        let mut h = g.reshape(x, &[b, 1, r, r])?;
        for c in [self.c1, self.c2] {
            let w = g.param(s, c.w);
            let bias = g.param(s, c.b);
            h = g.conv2d(h, w, 2, 1)?;
            h = g.channel_bias(h, bias)?;
            h = g.relu(h);
        }
        let q = r / 4;
        let flat = g.reshape(h, &[b, CHANNELS[1] * q * q])?;
        self.fc.forward(g, s, flat)
    }
}

/// Vector → `R×R` image: FC with relu, then two stride-2 transposed convs
/// with relu between them. The output is linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvDecoder {
    fc: Linear,
    d1: ConvLayer,
    d2: ConvLayer,
    pub res: usize,
    pub input: usize,
}

impl ConvDecoder {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, input: usize, res: usize, rng: &mut R) -> Result<ConvDecoder> {
        check_resolution(res)?;
        let q = res / 4;
        Ok(ConvDecoder {
            fc: Linear::new(store, &format!("{name}.fc"), input, CHANNELS[1] * q * q, rng)?,
            d1: ConvLayer::new(store, &format!("{name}.deconv1"), CHANNELS[1], CHANNELS[0], true, rng)?,
            d2: ConvLayer::new(store, &format!("{name}.deconv2"), CHANNELS[0], 1, true, rng)?,
            res,
            input,
        })
    }

    /// `x` is `[B, input]`; returns `[B, R·R]`.
    pub fn forward(&self, g: &mut Graph, s: &ParamStore, x: Var) -> Result<Var> {
        let b = g.value(x).rows();
        let q = self.res / 4;
        let h = self.fc.forward(g, s, x)?;
        let h = g.relu(h);
        let mut h = g.reshape(h, &[b, CHANNELS[1], q, q])?;
        for (i, c) in [self.d1, self.d2].into_iter().enumerate() {
            if i > 0 {
                h = g.relu(h);
            }
            let w = g.param(s, c.w);
            let bias = g.param(s, c.b);
            h = g.deconv2d(h, w, 2, 1, 1)?;
            h = g.channel_bias(h, bias)?;
        }
        g.reshape(h, &[b, self.res * self.res])
    }
}
