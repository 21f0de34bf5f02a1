//! Dense row-major f64 tensors and the matrix kernels behind them.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Dimension {
                op: "tensor",
                lhs: shape.to_vec(),
                rhs: vec![data.len()],
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], v: f64) -> Tensor {
        Tensor {
            shape: shape.to_vec(),
            data: vec![v; shape.iter().product()],
        }
    }

    pub fn scalar(v: f64) -> Tensor {
        Tensor {
            shape: vec![],
            data: vec![v],
        }
    }

    /// A `[1, n]` row.
    pub fn row(v: Vec<f64>) -> Tensor {
        Tensor {
            shape: vec![1, v.len()],
            data: v,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Leading extent (batch rows); 1 for scalars.
    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    /// Elements per leading index.
    pub fn cols(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    pub fn item(&self) -> f64 {
        self.data[0]
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Tensor> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(Error::Dimension {
                op: "reshape",
                lhs: self.shape,
                rhs: shape.to_vec(),
            });
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn dot(&self, o: &Tensor) -> f64 {
        self.data.iter().zip(&o.data).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn add_assign(&mut self, o: &Tensor) {
        for (a, b) in self.data.iter_mut().zip(&o.data) {
            *a += b;
        }
    }
}

/// `c = op(a) · op(b) + beta · c` where `a` is m×k and `b` is k×n after the
/// optional transposes. Buffers are row-major in their stored orientation.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    trans_a: bool,
    b: &[f64],
    trans_b: bool,
    beta: f64,
    c: &mut [f64],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if trans_a { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the slices hold exactly m·k, k·n and m·n elements and the
    // strides describe those layouts.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
