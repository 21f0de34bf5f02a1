//! Closed-form boundary intersections.

use super::{Point, Scene, Shape};
use crate::error::{Error, Result};

/// Points closer than this are the same intersection.
pub const EPS_DEDUPE: f64 = 1e-9;

/// Relative slack on parametric bounds and discriminants.
const EPS_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
enum Prim {
    Seg(Point, Point),
    Circ(Point, f64),
}

fn primitives(s: &Shape) -> Vec<Prim> {
    match *s {
        Shape::Segment { a, b } => vec![Prim::Seg(a, b)],
        Shape::Circle { center, radius } => vec![Prim::Circ(center, radius)],
        Shape::Rect {
            corner,
            width,
            height,
        } => {
            let c = Shape::rect_corners(corner, width, height);
            (0..4).map(|i| Prim::Seg(c[i], c[(i + 1) % 4])).collect()
        }
    }
}

fn seg_seg(p1: Point, p2: Point, q1: Point, q2: Point, out: &mut Vec<Point>) -> Result<()> {
    let r = p2.sub(p1);
    let s = q2.sub(q1);
    let qp = q1.sub(p1);
    let denom = r.cross(s);
    let scale = r.norm() * s.norm();
    if denom.abs() <= EPS_REL * scale {
        // Parallel: only collinear segments can meet.
        if qp.cross(r).abs() > EPS_REL * r.norm() * (qp.norm() + 1.0) {
            return Ok(());
        }
        let rr = r.dot(r);
        let t0 = qp.dot(r) / rr;
        let t1 = q2.sub(p1).dot(r) / rr;
        let lo = t0.min(t1).max(0.0);
        let hi = t0.max(t1).min(1.0);
        let overlap = (hi - lo) * rr.sqrt();
        if overlap > EPS_DEDUPE {
            return Err(Error::DegeneratePair(
                "collinear segments overlap".into(),
            ));
        }
        if overlap >= -EPS_DEDUPE {
            out.push(p1.add(r.scale(lo.clamp(0.0, 1.0))));
        }
        return Ok(());
    }
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    let slack = 1e-10;
    if (-slack..=1.0 + slack).contains(&t) && (-slack..=1.0 + slack).contains(&u) {
        out.push(p1.add(r.scale(t.clamp(0.0, 1.0))));
    }
    Ok(())
}

fn seg_circle(p1: Point, p2: Point, c: Point, radius: f64, out: &mut Vec<Point>) {
    let d = p2.sub(p1);
    let f = p1.sub(c);
    let a = d.dot(d);
    let b = 2.0 * f.dot(d);
    let cc = f.dot(f) - radius * radius;
    let disc = b * b - 4.0 * a * cc;
    let tol = EPS_REL * (b * b).max((4.0 * a * cc).abs()).max(1.0);
    let slack = 1e-10;
    let mut push = |t: f64| {
        if (-slack..=1.0 + slack).contains(&t) {
            out.push(p1.add(d.scale(t.clamp(0.0, 1.0))));
        }
    };
    if disc < -tol {
        return;
    }
    if disc <= tol {
        push(-b / (2.0 * a));
        return;
    }
    let sq = disc.sqrt();
    // Numerically stable root pair.
    let qv = -0.5 * (b + b.signum() * sq);
    let (t1, t2) = if qv == 0.0 {
        (sq / (2.0 * a), -sq / (2.0 * a))
    } else {
        (qv / a, cc / qv)
    };
    push(t1);
    push(t2);
}

fn circle_circle(c1: Point, r1: f64, c2: Point, r2: f64, out: &mut Vec<Point>) -> Result<()> {
    let dv = c2.sub(c1);
    let d = dv.norm();
    let scale = r1.max(r2);
    if d <= EPS_REL * scale {
        if (r1 - r2).abs() <= EPS_REL * scale {
            return Err(Error::DegeneratePair("coincident circles".into()));
        }
        return Ok(());
    }
    let tol = 1e-10 * scale;
    if d > r1 + r2 + tol || d < (r1 - r2).abs() - tol {
        return Ok(());
    }
    let a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let h2 = r1 * r1 - a * a;
    let base = c1.add(dv.scale(a / d));
    if h2 <= EPS_REL * r1 * r1 * 1e2 {
        out.push(base);
        return Ok(());
    }
    let h = h2.sqrt();
    let perp = Point::new(-dv.y / d, dv.x / d);
    out.push(base.add(perp.scale(h)));
    out.push(base.sub(perp.scale(h)));
    Ok(())
}

fn prim_pair(p: Prim, q: Prim, out: &mut Vec<Point>) -> Result<()> {
    match (p, q) {
        (Prim::Seg(a, b), Prim::Seg(c, d)) => seg_seg(a, b, c, d, out),
        (Prim::Seg(a, b), Prim::Circ(c, r)) | (Prim::Circ(c, r), Prim::Seg(a, b)) => {
            seg_circle(a, b, c, r, out);
            Ok(())
        }
        (Prim::Circ(c1, r1), Prim::Circ(c2, r2)) => circle_circle(c1, r1, c2, r2, out),
    }
}

fn dedupe_into(points: impl IntoIterator<Item = Point>, set: &mut Vec<Point>) {
    for p in points {
        if !set.iter().any(|q| q.dist(p) <= EPS_DEDUPE) {
            set.push(p);
        }
    }
}

/// All boundary intersection points of two shapes, sorted by (x, y).
///
/// Tangency contributes a single point. Pairs with infinitely many common
/// points are reported as [`Error::DegeneratePair`].
pub fn pair_intersections(a: &Shape, b: &Shape) -> Result<Vec<Point>> {
    if a == b {
        return Err(Error::DegeneratePair("identical shapes".into()));
    }
    let mut raw = Vec::new();
    for p in primitives(a) {
        for q in primitives(b) {
            prim_pair(p, q, &mut raw)?;
        }
    }
    let mut pts = Vec::with_capacity(raw.len());
    dedupe_into(raw, &mut pts);
    pts.sort_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
    Ok(pts)
}

/// Number of distinct intersection points among all shapes of the scene.
pub fn count_intersections(scene: &Scene) -> Result<usize> {
    Ok(scene_points(scene)?.len())
}

fn scene_points(scene: &Scene) -> Result<Vec<Point>> {
    let mut all = Vec::new();
    for (i, a) in scene.shapes.iter().enumerate() {
        for b in &scene.shapes[i + 1..] {
            dedupe_into(pair_intersections(a, b)?, &mut all);
        }
    }
    Ok(all)
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b.sub(a);
    let t = (p.sub(a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
    p.dist(a.add(d.scale(t)))
}

fn near_degenerate(p: Prim, q: Prim, delta: f64) -> Option<&'static str> {
    match (p, q) {
        (Prim::Seg(a, b), Prim::Seg(c, d)) => {
            let touching = point_segment_distance(a, c, d) < delta
                || point_segment_distance(b, c, d) < delta
                || point_segment_distance(c, a, b) < delta
                || point_segment_distance(d, a, b) < delta;
            touching.then_some("segment endpoint near another segment")
        }
        (Prim::Seg(a, b), Prim::Circ(c, r)) | (Prim::Circ(c, r), Prim::Seg(a, b)) => {
            if (a.dist(c) - r).abs() < delta || (b.dist(c) - r).abs() < delta {
                return Some("segment endpoint near circle");
            }
            let d = b.sub(a);
            let t = c.sub(a).dot(d) / d.dot(d);
            if (0.0..=1.0).contains(&t) {
                let foot = a.add(d.scale(t));
                if (foot.dist(c) - r).abs() < delta {
                    return Some("segment near tangent to circle");
                }
            }
            None
        }
        (Prim::Circ(c1, r1), Prim::Circ(c2, r2)) => {
            let d = c1.dist(c2);
            ((d - (r1 + r2)).abs() < delta || (d - (r1 - r2).abs()).abs() < delta)
                .then_some("circles near tangent")
        }
    }
}

/// Rejects scenes whose intersection count is fragile under perturbation
/// of size `delta`: near tangencies, endpoints or corners touching another
/// boundary, near-collinear overlap, and distinct intersection points
/// closer than `min_separation`.
pub fn well_conditioned(scene: &Scene, delta: f64, min_separation: f64) -> Result<(), String> {
    for (i, a) in scene.shapes.iter().enumerate() {
        for b in &scene.shapes[i + 1..] {
            for p in primitives(a) {
                for q in primitives(b) {
                    if let Some(why) = near_degenerate(p, q, delta) {
                        return Err(why.to_string());
                    }
                }
            }
        }
    }
    let pts = scene_points(scene).map_err(|e| e.to_string())?;
    for (i, p) in pts.iter().enumerate() {
        if pts[i + 1..].iter().any(|q| q.dist(*p) < min_separation) {
            return Err("intersection points too close".into());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> Shape {
        Shape::segment(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn chord_through_center_hits_twice() {
        let s = seg(0.0, 0.0, 10.0, 10.0);
        let c = Shape::circle(2.0, 5.0, 5.0).unwrap();
        assert_eq!(pair_intersections(&s, &c).unwrap().len(), 2);
    }

    #[test]
    fn distant_circles_miss() {
        let a = Shape::circle(1.0, 2.0, 2.0).unwrap();
        let b = Shape::circle(1.0, 9.0, 9.0).unwrap();
        assert!(pair_intersections(&a, &b).unwrap().is_empty());
    }

    #[test]
    fn tangent_circles_meet_once() {
        let a = Shape::circle(1.0, 2.0, 2.0).unwrap();
        let b = Shape::circle(1.0, 4.0, 2.0).unwrap();
        let p = pair_intersections(&a, &b).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p[0].dist(Point::new(3.0, 2.0)) < 1e-12);
    }

    #[test]
    fn tangent_segment_meets_once() {
        let s = seg(0.0, 1.0, 10.0, 1.0);
        let c = Shape::circle(1.0, 5.0, 2.0).unwrap();
        assert_eq!(pair_intersections(&s, &c).unwrap().len(), 1);
    }

    #[test]
    fn plus_sign_rectangles() {
        // 6 wide x 2 high bar across a 2 wide x 6 high bar.
        let a = Shape::rect(2.0, 6.0, 2.0, 4.0).unwrap();
        let b = Shape::rect(6.0, 2.0, 4.0, 2.0).unwrap();
        assert_eq!(pair_intersections(&a, &b).unwrap().len(), 4);
    }

    #[test]
    fn segment_through_rect_corner_counts_once() {
        let r = Shape::rect(2.0, 2.0, 4.0, 4.0).unwrap();
        let s = seg(3.0, 3.0, 7.0, 7.0);
        // Enters through (4,4), leaves through (6,6); both are corners.
        assert_eq!(pair_intersections(&r, &s).unwrap().len(), 2);
    }

    #[test]
    fn crossing_segments() {
        let sc = Scene::new(vec![seg(0.0, 5.0, 10.0, 5.0), seg(5.0, 0.0, 5.0, 10.0)]).unwrap();
        assert_eq!(count_intersections(&sc).unwrap(), 1);
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(count_intersections(&Scene::default()).unwrap(), 0);
        let sc = Scene::new(vec![seg(0.0, 5.0, 10.0, 5.0)]).unwrap();
        assert_eq!(count_intersections(&sc).unwrap(), 0);
    }

    #[test]
    fn concurrent_segments_dedupe() {
        let sc = Scene::new(vec![
            seg(0.0, 5.0, 10.0, 5.0),
            seg(5.0, 0.0, 5.0, 10.0),
            seg(0.0, 0.0, 10.0, 10.0),
        ])
        .unwrap();
        assert_eq!(count_intersections(&sc).unwrap(), 1);
    }

    #[test]
    fn degenerate_pairs_are_reported() {
        let a = seg(0.0, 0.0, 5.0, 0.0);
        let b = seg(2.0, 0.0, 8.0, 0.0);
        assert!(matches!(pair_intersections(&a, &b), Err(Error::DegeneratePair(_))));
        let c = Shape::circle(1.0, 5.0, 5.0).unwrap();
        assert!(matches!(pair_intersections(&c, &c), Err(Error::DegeneratePair(_))));
        let r1 = Shape::rect(2.0, 2.0, 1.0, 1.0).unwrap();
        let r2 = Shape::rect(2.0, 2.0, 3.0, 2.0).unwrap();
        assert!(matches!(pair_intersections(&r1, &r2), Err(Error::DegeneratePair(_))));
        // Rectangle edge lying along a segment.
        let s = seg(0.0, 1.0, 10.0, 1.0);
        assert!(pair_intersections(&r1, &s).is_err());
    }

    #[test]
    fn collinear_touching_endpoints_is_one_point() {
        let a = seg(0.0, 0.0, 5.0, 0.0);
        let b = seg(5.0, 0.0, 8.0, 0.0);
        assert_eq!(pair_intersections(&a, &b).unwrap().len(), 1);
    }

    #[test]
    fn well_conditioned_flags_near_tangent() {
        let a = Shape::circle(1.0, 2.0, 2.0).unwrap();
        let b = Shape::circle(1.0, 4.0005, 2.0).unwrap();
        let sc = Scene::new(vec![a, b]).unwrap();
        assert!(well_conditioned(&sc, 1e-3, 1e-2).is_err());
        let b = Shape::circle(1.0, 4.5, 2.0).unwrap();
        let sc = Scene::new(vec![a, b]).unwrap();
        assert!(well_conditioned(&sc, 1e-3, 1e-2).is_ok());
    }
}
