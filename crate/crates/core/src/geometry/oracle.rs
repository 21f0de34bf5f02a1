//! Sampling-based intersection counter used to cross-check the closed-form
//! solver. It walks each boundary at a fixed arc-length step and watches the
//! other shape's implicit function for sign changes (crossings) and
//! zero-touches (tangencies). It shares no code with the analytic path.

use super::{Point, Scene, Shape};

struct Walk {
    pts: Vec<Point>,
    closed: bool,
}

fn walk(s: &Shape, step: f64) -> Walk {
    let line = |a: Point, b: Point, out: &mut Vec<Point>, include_end: bool| {
        let n = (a.dist(b) / step).ceil().max(1.0) as usize;
        let end = if include_end { n } else { n - 1 };
        for k in 0..=end {
            let t = k as f64 / n as f64;
            out.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        }
    };
    match *s {
        Shape::Segment { a, b } => {
            let mut pts = Vec::new();
            line(a, b, &mut pts, true);
            Walk { pts, closed: false }
        }
        Shape::Circle { center, radius } => {
            let n = (std::f64::consts::TAU * radius / step).ceil().max(8.0) as usize;
            let pts = (0..n)
                .map(|k| {
                    let th = std::f64::consts::TAU * k as f64 / n as f64;
                    Point::new(center.x + radius * th.cos(), center.y + radius * th.sin())
                })
                .collect();
            Walk { pts, closed: true }
        }
        Shape::Rect {
            corner,
            width,
            height,
        } => {
            let c = [
                corner,
                Point::new(corner.x + width, corner.y),
                Point::new(corner.x + width, corner.y + height),
                Point::new(corner.x, corner.y + height),
            ];
            let mut pts = Vec::new();
            for i in 0..4 {
                line(c[i], c[(i + 1) % 4], &mut pts, false);
            }
            Walk { pts, closed: true }
        }
    }
}

fn perimeter(s: &Shape) -> f64 {
    match *s {
        Shape::Segment { a, b } => a.dist(b),
        Shape::Circle { radius, .. } => std::f64::consts::TAU * radius,
        Shape::Rect { width, height, .. } => 2.0 * (width + height),
    }
}

/// Signed implicit value and unsigned boundary distance of `p` w.r.t. `s`.
/// For segments the sign is the side of the supporting line.
fn implicit(s: &Shape, p: Point) -> (f64, f64) {
    match *s {
        Shape::Circle { center, radius } => {
            let f = ((p.x - center.x).powi(2) + (p.y - center.y).powi(2)).sqrt() - radius;
            (f, f.abs())
        }
        Shape::Rect {
            corner,
            width,
            height,
        } => {
            let (x0, y0, x1, y1) = (corner.x, corner.y, corner.x + width, corner.y + height);
            let dx = (x0 - p.x).max(p.x - x1);
            let dy = (y0 - p.y).max(p.y - y1);
            let f = if dx <= 0.0 && dy <= 0.0 {
                dx.max(dy)
            } else {
                (dx.max(0.0).powi(2) + dy.max(0.0).powi(2)).sqrt()
            };
            (f, f.abs())
        }
        Shape::Segment { a, b } => {
            let (ux, uy) = (b.x - a.x, b.y - a.y);
            let len = (ux * ux + uy * uy).sqrt();
            let (vx, vy) = (p.x - a.x, p.y - a.y);
            let side = (ux * vy - uy * vx) / len;
            let t = ((vx * ux + vy * uy) / (len * len)).clamp(0.0, 1.0);
            let d = ((p.x - a.x - t * ux).powi(2) + (p.y - a.y - t * uy).powi(2)).sqrt();
            (side, d)
        }
    }
}

fn on_segment_extent(s: &Shape, p: Point) -> bool {
    match *s {
        Shape::Segment { a, b } => {
            let (ux, uy) = (b.x - a.x, b.y - a.y);
            let t = ((p.x - a.x) * ux + (p.y - a.y) * uy) / (ux * ux + uy * uy);
            (-1e-9..=1.0 + 1e-9).contains(&t)
        }
        _ => true,
    }
}

fn pair_points(walker: &Walk, target: &Shape, step: f64, out: &mut Vec<Point>) {
    let near = 2.0 * step;
    let zero = 1e-13;
    let n = walker.pts.len();
    let eval: Vec<(f64, f64)> = walker.pts.iter().map(|&p| implicit(target, p)).collect();
    let in_run = |k: usize| eval[k].1 < near;

    // Visit order: for closed walks start just after a sample outside any run.
    let order: Vec<usize> = if walker.closed {
        match (0..n).find(|&k| !in_run(k)) {
            Some(k0) => (1..=n).map(|i| (k0 + i) % n).collect(),
            None => (0..n).collect(),
        }
    } else {
        (0..n).collect()
    };

    let mut i = 0;
    while i < order.len() {
        if !in_run(order[i]) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < order.len() && in_run(order[j + 1]) {
            j += 1;
        }
        let run = &order[i..=j];
        let mut crossings = 0;
        let mut last: Option<usize> = None;
        let mut best = run[0];
        for &k in run {
            if eval[k].1 < eval[best].1 {
                best = k;
            }
            let f = eval[k].0;
            if f.abs() <= zero {
                continue;
            }
            if let Some(prev) = last {
                let fp = eval[prev].0;
                if fp.signum() != f.signum() {
                    let (p, q) = (walker.pts[prev], walker.pts[k]);
                    let t = fp / (fp - f);
                    let x = Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y));
                    if on_segment_extent(target, x) {
                        out.push(x);
                        crossings += 1;
                    }
                }
            }
            last = Some(k);
        }
        if crossings == 0 && eval[best].1 < step {
            out.push(walker.pts[best]);
        }
        i = j + 1;
    }
}

fn boxes_overlap(a: &Shape, b: &Shape, pad: f64) -> bool {
    let (alo, ahi) = a.bbox();
    let (blo, bhi) = b.bbox();
    alo.x <= bhi.x + pad && blo.x <= ahi.x + pad && alo.y <= bhi.y + pad && blo.y <= ahi.y + pad
}

/// Counts boundary intersection points by dense sampling with arc-length
/// `step` (at most `1e-3`). Points within `4·step` of each other merge.
pub fn brute_force_count(scene: &Scene, step: f64) -> usize {
    assert!(step > 0.0 && step <= 1e-3, "step must be in (0, 1e-3]");
    let walks: Vec<Walk> = scene.shapes.iter().map(|s| walk(s, step)).collect();
    let mut pts = Vec::new();
    for i in 0..scene.shapes.len() {
        for j in i + 1..scene.shapes.len() {
            let (a, b) = (&scene.shapes[i], &scene.shapes[j]);
            if !boxes_overlap(a, b, 4.0 * step) {
                continue;
            }
            // Walk the shorter boundary.
            if perimeter(a) <= perimeter(b) {
                pair_points(&walks[i], b, step, &mut pts);
            } else {
                pair_points(&walks[j], a, step, &mut pts);
            }
        }
    }
    let merge = 4.0 * step;
    let mut reps: Vec<Point> = Vec::new();
    for p in pts {
        if !reps.iter().any(|q| q.dist(p) <= merge) {
            reps.push(p);
        }
    }
    reps.len()
}
