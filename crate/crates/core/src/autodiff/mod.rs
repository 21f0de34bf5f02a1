//! Dense f64 tensors with tape-based reverse-mode differentiation.

mod adam;
mod check;
pub mod conv;
mod graph;
mod params;
mod tensor;

pub use adam::Adam;
pub use check::{grad_check, grad_check_params, CheckReport, RESOLUTION};
pub use graph::{pe_weight, Gradients, Graph, Var};
pub use params::{Param, ParamId, ParamStore};
pub use tensor::Tensor;
