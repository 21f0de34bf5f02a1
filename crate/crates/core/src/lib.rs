//! Geometric-reasoning question answering: the FloorPlanQA and
//! ShapeIntersection generators with their ground-truth oracles, a small
//! reverse-mode autodiff engine, and the Dynamic Spatial Memory Network with
//! its DMN+ and LSTM baselines.

pub mod autodiff;
pub mod error;
pub mod floorplan;
pub mod geometry;
pub mod io;
pub mod layers;
pub mod models;
pub mod seed;
pub mod shapes;
pub mod training;

pub use error::{Error, Result};
