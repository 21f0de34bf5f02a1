//! Binary rasterization of boundaries onto square canvases.

use super::{Point, Shape, CANVAS_EXTENT};
use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

/// A row-major single-channel image with values in `[0, 1]`. Row 0 is the
/// top (largest y) of the drawing area.
#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Canvas {
    pub fn new(height: usize, width: usize) -> Canvas {
        Canvas {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_data(height: usize, width: usize, data: Vec<f32>) -> Canvas {
        assert_eq!(data.len(), height * width);
        let data = data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Canvas {
            height,
            width,
            data,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f32) {
        self.data[row * self.width + col] = v.clamp(0.0, 1.0);
    }

    pub fn lit(&self) -> usize {
        self.data.iter().filter(|&&v| v > 0.0).count()
    }

    /// Binary PGM (P5, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.data.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_pgm()).map_err(|e| Error::io(path, e))
    }
}

/// Maps a square world region `[0, extent]²` onto an `res × res` canvas.
#[derive(Debug, Clone, Copy)]
pub struct Raster {
    pub res: usize,
    pub extent: f64,
}

impl Raster {
    pub fn new(res: usize, extent: f64) -> Self {
        Raster { res, extent }
    }

    /// Continuous pixel coordinates (column, row) of a world point.
    pub fn to_pixel(&self, p: Point) -> (f64, f64) {
        let k = self.res as f64 / self.extent;
        (p.x * k, (self.extent - p.y) * k)
    }

    fn cell(&self, v: f64) -> usize {
        (v.floor().max(0.0) as usize).min(self.res - 1)
    }

    /// (row, column) of the pixel holding a world point.
    pub fn pixel(&self, p: Point) -> (usize, usize) {
        let (x, y) = self.to_pixel(p);
        (self.cell(y), self.cell(x))
    }

    pub fn plot(&self, c: &mut Canvas, col: f64, row: f64) {
        let (r, cc) = (self.cell(row), self.cell(col));
        c.set(r, cc, 1.0);
    }

    /// 8-connected one-pixel stroke between two world points.
    pub fn draw_segment(&self, c: &mut Canvas, a: Point, b: Point) {
        let (x0, y0) = self.to_pixel(a);
        let (x1, y1) = self.to_pixel(b);
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize;
        if steps == 0 {
            self.plot(c, x0, y0);
            return;
        }
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            self.plot(c, x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        }
    }

    pub fn draw_circle(&self, c: &mut Canvas, center: Point, radius: f64) {
        let (cx, cy) = self.to_pixel(center);
        let r = radius * self.res as f64 / self.extent;
        let reach = r / std::f64::consts::SQRT_2;
        // Sweep columns over the top/bottom octants and rows over the sides.
        let lo = (cx - reach).floor() as i64;
        let hi = (cx + reach).ceil() as i64;
        for col in lo..=hi {
            let x = col as f64 + 0.5;
            let dx = x - cx;
            if dx.abs() > reach {
                continue;
            }
            let dy = (r * r - dx * dx).sqrt();
            self.plot(c, x, cy + dy);
            self.plot(c, x, cy - dy);
        }
        let lo = (cy - reach).floor() as i64;
        let hi = (cy + reach).ceil() as i64;
        for row in lo..=hi {
            let y = row as f64 + 0.5;
            let dy = y - cy;
            if dy.abs() > reach {
                continue;
            }
            let dx = (r * r - dy * dy).sqrt();
            self.plot(c, cx + dx, y);
            self.plot(c, cx - dx, y);
        }
        if reach < 0.5 {
            self.plot(c, cx, cy);
        }
    }

    pub fn draw_rect(&self, c: &mut Canvas, corner: Point, width: f64, height: f64) {
        let k = Shape::rect_corners(corner, width, height);
        for i in 0..4 {
            self.draw_segment(c, k[i], k[(i + 1) % 4]);
        }
    }

    pub fn draw_shape(&self, c: &mut Canvas, s: &Shape) {
        match *s {
            Shape::Segment { a, b } => self.draw_segment(c, a, b),
            Shape::Circle { center, radius } => self.draw_circle(c, center, radius),
            Shape::Rect {
                corner,
                width,
                height,
            } => self.draw_rect(c, corner, width, height),
        }
    }

    /// Lights a `size × size` block of pixels centred on the pixel holding `p`.
    pub fn fill_square(&self, c: &mut Canvas, p: Point, size: usize) {
        let (x, y) = self.to_pixel(p);
        let (r0, c0) = (self.cell(y) as i64, self.cell(x) as i64);
        let half = (size / 2) as i64;
        for dr in -half..=half {
            for dc in -half..=half {
                let (r, cc) = (r0 + dr, c0 + dc);
                if (0..self.res as i64).contains(&r) && (0..self.res as i64).contains(&cc) {
                    c.set(r as usize, cc as usize, 1.0);
                }
            }
        }
    }
}

/// Binary mask of a shape's boundary on the 10×10 canvas at `res × res`.
pub fn rasterize(s: &Shape, res: usize) -> Canvas {
    let mut c = Canvas::new(res, res);
    Raster::new(res, CANVAS_EXTENT).draw_shape(&mut c, s);
    c
}
