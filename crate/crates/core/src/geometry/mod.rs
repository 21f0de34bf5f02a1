//! Exact 2-D primitives on a 10×10 canvas.
//!
//! Shapes are finite segments, circles and axis-aligned rectangles. A
//! rectangle participates in intersection counting through its four-sided
//! boundary only. Every shape has a fixed 5-number encoding whose first entry
//! is the type code (1 segment, 2 circle, 3 rectangle).

mod intersect;
pub mod oracle;
mod raster;

pub use intersect::{count_intersections, pair_intersections, well_conditioned, EPS_DEDUPE};
pub use raster::{rasterize, Canvas, Raster};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Side length of the square canvas, in canvas units.
pub const CANVAS_EXTENT: f64 = 10.0;

/// Separation below which generated configurations count as near-degenerate.
pub const DELTA_GEN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        self.sub(o).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Segment { a: Point, b: Point },
    Circle { center: Point, radius: f64 },
    /// Axis-aligned; `corner` is the bottom-left vertex.
    Rect { corner: Point, width: f64, height: f64 },
}

impl Shape {
    pub fn segment(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Shape> {
        let s = Shape::Segment {
            a: Point::new(x1, y1),
            b: Point::new(x2, y2),
        };
        s.validate().map(|_| s)
    }

    pub fn circle(radius: f64, cx: f64, cy: f64) -> Result<Shape> {
        let s = Shape::Circle {
            center: Point::new(cx, cy),
            radius,
        };
        s.validate().map(|_| s)
    }

    pub fn rect(height: f64, width: f64, x: f64, y: f64) -> Result<Shape> {
        let s = Shape::Rect {
            corner: Point::new(x, y),
            width,
            height,
        };
        s.validate().map(|_| s)
    }

    pub fn type_code(&self) -> u8 {
        match self {
            Shape::Segment { .. } => 1,
            Shape::Circle { .. } => 2,
            Shape::Rect { .. } => 3,
        }
    }

    /// Checks the per-shape invariants (finite, positive size, distinct
    /// endpoints). Canvas containment is checked separately.
    pub fn validate(&self) -> Result<()> {
        let enc = self.encode();
        if enc.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidShape(format!("non-finite value in {enc:?}")));
        }
        match *self {
            Shape::Segment { a, b } if a == b => {
                Err(Error::InvalidShape("segment endpoints coincide".into()))
            }
            Shape::Circle { radius, .. } if radius <= 0.0 => {
                Err(Error::InvalidShape("non-positive radius".into()))
            }
            Shape::Rect { width, height, .. } if width <= 0.0 || height <= 0.0 => {
                Err(Error::InvalidShape("non-positive rectangle side".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn bbox(&self) -> (Point, Point) {
        match *self {
            Shape::Segment { a, b } => (
                Point::new(a.x.min(b.x), a.y.min(b.y)),
                Point::new(a.x.max(b.x), a.y.max(b.y)),
            ),
            Shape::Circle { center, radius } => (
                Point::new(center.x - radius, center.y - radius),
                Point::new(center.x + radius, center.y + radius),
            ),
            Shape::Rect {
                corner,
                width,
                height,
            } => (corner, Point::new(corner.x + width, corner.y + height)),
        }
    }

    /// Endpoints, centre or corner lie in `[0, 10]²`. Full containment of the
    /// extent is a [`Scene`] invariant.
    pub fn anchors_on_canvas(&self) -> bool {
        let on = |p: Point| (0.0..=CANVAS_EXTENT).contains(&p.x) && (0.0..=CANVAS_EXTENT).contains(&p.y);
        match *self {
            Shape::Segment { a, b } => on(a) && on(b),
            Shape::Circle { center, .. } => on(center),
            Shape::Rect { corner, .. } => on(corner),
        }
    }

    pub fn within_canvas(&self) -> bool {
        let (lo, hi) = self.bbox();
        lo.x >= 0.0 && lo.y >= 0.0 && hi.x <= CANVAS_EXTENT && hi.y <= CANVAS_EXTENT
    }

    /// Rectangle corners counter-clockwise from the bottom-left.
    pub fn rect_corners(corner: Point, width: f64, height: f64) -> [Point; 4] {
        [
            corner,
            Point::new(corner.x + width, corner.y),
            Point::new(corner.x + width, corner.y + height),
            Point::new(corner.x, corner.y + height),
        ]
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Shape {
        let d = Point::new(dx, dy);
        match *self {
            Shape::Segment { a, b } => Shape::Segment {
                a: a.add(d),
                b: b.add(d),
            },
            Shape::Circle { center, radius } => Shape::Circle {
                center: center.add(d),
                radius,
            },
            Shape::Rect {
                corner,
                width,
                height,
            } => Shape::Rect {
                corner: corner.add(d),
                width,
                height,
            },
        }
    }

    /// The 5-number record: `(1,x1,y1,x2,y2)`, `(2,r,cx,cy,0)` or `(3,h,w,x,y)`.
    pub fn encode(&self) -> [f64; 5] {
        match *self {
            Shape::Segment { a, b } => [1.0, a.x, a.y, b.x, b.y],
            Shape::Circle { center, radius } => [2.0, radius, center.x, center.y, 0.0],
            Shape::Rect {
                corner,
                width,
                height,
            } => [3.0, height, width, corner.x, corner.y],
        }
    }

    pub fn decode(v: &[f64; 5]) -> Result<Shape> {
        let shape = match v[0] {
            c if c == 1.0 => Shape::Segment {
                a: Point::new(v[1], v[2]),
                b: Point::new(v[3], v[4]),
            },
            c if c == 2.0 => {
                if v[1] <= 0.0 {
                    return Err(Error::Decode("non-positive radius".into()));
                }
                if v[4] != 0.0 {
                    return Err(Error::Decode("circle padding slot must be 0".into()));
                }
                Shape::Circle {
                    center: Point::new(v[2], v[3]),
                    radius: v[1],
                }
            }
            c if c == 3.0 => {
                if v[1] <= 0.0 || v[2] <= 0.0 {
                    return Err(Error::Decode("non-positive rectangle side".into()));
                }
                Shape::Rect {
                    corner: Point::new(v[3], v[4]),
                    width: v[2],
                    height: v[1],
                }
            }
            c => return Err(Error::Decode(format!("unknown type code {c}"))),
        };
        shape
            .validate()
            .map_err(|e| Error::Decode(e.to_string()))?;
        if !shape.anchors_on_canvas() {
            return Err(Error::Decode(format!("coordinates of {v:?} are off the canvas")));
        }
        Ok(shape)
    }
}

/// An ordered collection of shapes on the canvas.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    pub shapes: Vec<Shape>,
}

impl Scene {
    /// Validates containment and pairwise distinctness. Degenerate pairs are
    /// reported by [`count_intersections`].
    pub fn new(shapes: Vec<Shape>) -> Result<Scene> {
        for (i, s) in shapes.iter().enumerate() {
            s.validate()?;
            if !s.within_canvas() {
                return Err(Error::InvalidShape(format!("shape {i} leaves the canvas")));
            }
            if shapes[..i].contains(s) {
                return Err(Error::InvalidShape(format!("shape {i} duplicates an earlier one")));
            }
        }
        Ok(Scene { shapes })
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    /// Counts of (segments, rectangles, circles).
    pub fn composition(&self) -> (usize, usize, usize) {
        self.shapes.iter().fold((0, 0, 0), |(s, r, c), sh| match sh {
            Shape::Segment { .. } => (s + 1, r, c),
            Shape::Rect { .. } => (s, r + 1, c),
            Shape::Circle { .. } => (s, r, c + 1),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodes_paper_rectangle() {
        let r = Shape::rect(2.0, 8.0, 5.0, 5.0).unwrap();
        assert_eq!(r.encode(), [3.0, 2.0, 8.0, 5.0, 5.0]);
    }

    #[test]
    fn encodes_circle_with_zero_pad() {
        let c = Shape::circle(1.0, 3.0, 3.0).unwrap();
        assert_eq!(c.encode(), [2.0, 1.0, 3.0, 3.0, 0.0]);
    }

    #[test]
    fn encodes_segment() {
        let s = Shape::segment(0.0, 0.0, 10.0, 10.0).unwrap();
        assert_eq!(s.encode(), [1.0, 0.0, 0.0, 10.0, 10.0]);
    }

    #[test]
    fn decode_rejects_bad_records() {
        assert_eq!(
            Shape::decode(&[3.0, 2.0, 8.0, 5.0, 5.0]).unwrap(),
            Shape::rect(2.0, 8.0, 5.0, 5.0).unwrap()
        );
        let e = Shape::decode(&[4.0, 0.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(e.to_string().contains("unknown type code"), "{e}");
        let e = Shape::decode(&[2.0, -1.0, 3.0, 3.0, 0.0]).unwrap_err();
        assert!(e.to_string().contains("non-positive radius"), "{e}");
        let e = Shape::decode(&[2.0, 2.0, 11.0, 9.0, 0.0]).unwrap_err();
        assert!(e.to_string().contains("off the canvas"), "{e}");
    }

    #[test]
    fn scene_rejects_duplicates() {
        let c = Shape::circle(1.0, 3.0, 3.0).unwrap();
        assert!(Scene::new(vec![c, c]).is_err());
    }
}
