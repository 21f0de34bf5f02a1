//! im2col / col2im lowering for 2-D convolutions over batched images.
//!
//! Images are `[B, C, H, W]`. Column matrices are `[C·k·k, B·Ho·Wo]`, with
//! rows ordered (channel, ky, kx) and columns ordered (batch, oy, ox).

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub batch: usize,
    pub channels: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub ho: usize,
    pub wo: usize,
}

impl ConvGeom {
    /// Geometry of a convolution reading an `h × w` image.
    pub fn new(batch: usize, channels: usize, h: usize, w: usize, k: usize, stride: usize, pad: usize) -> Option<ConvGeom> {
        if h + 2 * pad < k || w + 2 * pad < k || stride == 0 {
            return None;
        }
        Some(ConvGeom {
            batch,
            channels,
            h,
            w,
            k,
            stride,
            pad,
            ho: (h + 2 * pad - k) / stride + 1,
            wo: (w + 2 * pad - k) / stride + 1,
        })
    }

    pub fn col_rows(&self) -> usize {
        self.channels * self.k * self.k
    }

    pub fn col_cols(&self) -> usize {
        self.batch * self.ho * self.wo
    }

    /// For each kernel offset, the input coordinate read by each output
    /// coordinate along one axis, or `None` inside the padding.
    fn taps(&self, n_out: usize, n_in: usize) -> Vec<Vec<Option<usize>>> {
        (0..self.k)
            .map(|kk| {
                (0..n_out)
                    .map(|o| {
                        let v = (o * self.stride + kk) as isize - self.pad as isize;
                        (v >= 0 && (v as usize) < n_in).then_some(v as usize)
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn im2col(x: &[f64], g: &ConvGeom) -> Vec<f64> {
    let mut cols = Vec::with_capacity(g.col_rows() * g.col_cols());
    let hw = g.h * g.w;
    let (ty, tx) = (g.taps(g.ho, g.h), g.taps(g.wo, g.w));
    for c in 0..g.channels {
        for ys in &ty {
            for xs in &tx {
                for b in 0..g.batch {
                    let img = &x[(b * g.channels + c) * hw..][..hw];
                    for iy in ys {
                        match iy {
                            Some(iy) => {
                                let line = &img[iy * g.w..][..g.w];
                                cols.extend(xs.iter().map(|ix| ix.map_or(0.0, |ix| line[ix])));
                            }
                            None => cols.extend(std::iter::repeat_n(0.0, g.wo)),
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatters columns back onto the image, summing
/// overlapping contributions.
pub fn col2im(cols: &[f64], g: &ConvGeom) -> Vec<f64> {
    let mut x = vec![0.0; g.batch * g.channels * g.h * g.w];
    let hw = g.h * g.w;
    let (ty, tx) = (g.taps(g.ho, g.h), g.taps(g.wo, g.w));
    let mut src = cols.chunks_exact(g.wo);
    for c in 0..g.channels {
        for ys in &ty {
            for xs in &tx {
                for b in 0..g.batch {
                    let img = &mut x[(b * g.channels + c) * hw..][..hw];
                    for iy in ys {
                        let line = src.next().expect("column count matches geometry");
                        if let Some(iy) = iy {
                            let out = &mut img[iy * g.w..][..g.w];
                            for (ix, v) in xs.iter().zip(line) {
                                if let Some(ix) = ix {
                                    out[*ix] += v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    x
}

/// `[B, C, P]` → `[C, B·P]`.
pub fn to_channel_major(x: &[f64], b: usize, c: usize, p: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for bi in 0..b {
        for ci in 0..c {
            out[ci * b * p + bi * p..][..p].copy_from_slice(&x[(bi * c + ci) * p..][..p]);
        }
    }
    out
}

/// `[C, B·P]` → `[B, C, P]`.
pub fn from_channel_major(x: &[f64], b: usize, c: usize, p: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for bi in 0..b {
        for ci in 0..c {
            out[(bi * c + ci) * p..][..p].copy_from_slice(&x[ci * b * p + bi * p..][..p]);
        }
    }
    out
}
