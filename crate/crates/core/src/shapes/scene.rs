//! Random scene proposals.

use crate::error::{Error, Result};
use crate::geometry::{well_conditioned, Point, Scene, Shape, CANVAS_EXTENT, DELTA_GEN};
use rand::seq::SliceRandom;
use rand::Rng;

pub const MAX_SEGMENTS: usize = 6;
pub const MAX_RECTS: usize = 3;
pub const MAX_CIRCLES: usize = 3;

/// Distinct intersection points closer than this are rejected, so the
/// sampling oracle can always separate them.
pub const MIN_POINT_SEPARATION: f64 = 1e-2;

const SCENE_ATTEMPTS: usize = 10_000;

/// Shape counts of a scene: segments, rectangles, circles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Composition {
    pub segments: usize,
    pub rects: usize,
    pub circles: usize,
}

impl Composition {
    pub fn total(&self) -> usize {
        self.segments + self.rects + self.circles
    }

    /// Every legal composition: 1..=6 segments, 0..=3 rectangles and circles.
    pub fn all() -> Vec<Composition> {
        let mut v = Vec::new();
        for segments in 1..=MAX_SEGMENTS {
            for rects in 0..=MAX_RECTS {
                for circles in 0..=MAX_CIRCLES {
                    v.push(Composition {
                        segments,
                        rects,
                        circles,
                    });
                }
            }
        }
        v
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Composition {
        Composition {
            segments: rng.gen_range(1..=MAX_SEGMENTS),
            rects: rng.gen_range(0..=MAX_RECTS),
            circles: rng.gen_range(0..=MAX_CIRCLES),
        }
    }
}

fn random_segment<R: Rng + ?Sized>(rng: &mut R) -> Shape {
    let len = rng.gen_range(1.0..=9.0);
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    let (dx, dy) = (len * theta.cos(), len * theta.sin());
    let x = rng.gen_range((-dx).max(0.0)..=CANVAS_EXTENT.min(CANVAS_EXTENT - dx));
    let y = rng.gen_range((-dy).max(0.0)..=CANVAS_EXTENT.min(CANVAS_EXTENT - dy));
    Shape::Segment {
        a: Point::new(x, y),
        b: Point::new(x + dx, y + dy),
    }
}

fn random_circle<R: Rng + ?Sized>(rng: &mut R) -> Shape {
    let radius = rng.gen_range(0.5..=3.0);
    Shape::Circle {
        center: Point::new(
            rng.gen_range(radius..=CANVAS_EXTENT - radius),
            rng.gen_range(radius..=CANVAS_EXTENT - radius),
        ),
        radius,
    }
}

fn random_rect<R: Rng + ?Sized>(rng: &mut R) -> Shape {
    let width = rng.gen_range(1.0..=8.0);
    let height = rng.gen_range(1.0..=8.0);
    Shape::Rect {
        corner: Point::new(
            rng.gen_range(0.0..=CANVAS_EXTENT - width),
            rng.gen_range(0.0..=CANVAS_EXTENT - height),
        ),
        width,
        height,
    }
}

/// Draws a well-conditioned scene with exactly the given composition, in
/// random description order.
pub fn sample_scene_with<R: Rng + ?Sized>(rng: &mut R, comp: Composition) -> Result<Scene> {
    for _ in 0..SCENE_ATTEMPTS {
        let mut shapes = Vec::with_capacity(comp.total());
        shapes.extend((0..comp.segments).map(|_| random_segment(rng)));
        shapes.extend((0..comp.rects).map(|_| random_rect(rng)));
        shapes.extend((0..comp.circles).map(|_| random_circle(rng)));
        shapes.shuffle(rng);
        let Ok(scene) = Scene::new(shapes) else {
            continue;
        };
        if well_conditioned(&scene, DELTA_GEN, MIN_POINT_SEPARATION).is_ok() {
            return Ok(scene);
        }
    }
    Err(Error::Generation(format!(
        "no well-conditioned scene for {comp:?} in {SCENE_ATTEMPTS} attempts"
    )))
}

/// Draws a scene with segment count uniform on 1..=6 and rectangle and
/// circle counts uniform on 0..=3 (6.5 shapes on average).
pub fn sample_scene<R: Rng + ?Sized>(rng: &mut R) -> Result<Scene> {
    let comp = Composition::random(rng);
    sample_scene_with(rng, comp)
}
