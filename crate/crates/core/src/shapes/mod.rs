//! ShapeIntersection generation.

mod dataset;
mod scene;

pub use dataset::{
    describe_scene, generate_dataset, generate_splits, generate_with, Calibration, ShapeDataset,
    ShapeHeader, ShapeSample, GENERATOR_VERSION, QUESTION,
};
pub use scene::{
    sample_scene, sample_scene_with, Composition, MAX_CIRCLES, MAX_RECTS, MAX_SEGMENTS,
    MIN_POINT_SEPARATION,
};
